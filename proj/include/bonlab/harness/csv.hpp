#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/types.hpp"

namespace bonlab::harness {

/// Raised for malformed input files; the message names the file and row.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `x`.
std::string format_real(double x);

/// Writes the scores schema
///   user_id,query_id,candidate_id,true_score[,pred_mean][,pred_var][,f0,...]
/// Optional columns appear only when every candidate carries the field.
/// Candidate ids are "c<k>" with k the position in the pool.
void write_scores_csv(std::ostream& out, std::span<const UserDataset> datasets);

/// Parses the scores schema. Columns may appear in any order; pred_mean,
/// pred_var and f<k> are optional, and an empty optional cell leaves the field
/// unset. Rows are grouped into pools by (user_id, query_id), keeping the
/// order in which users, pools and candidates first appear. Row numbers in
/// errors count the header as row 1.
std::vector<UserDataset> parse_scores_csv(std::istream& in, const std::string& source = "<input>");
std::vector<UserDataset> ingest_scores_csv(const std::filesystem::path& path);

/// Curve schema `label,n,utility,trials`.
void write_curves_csv(std::ostream& out, std::span<const ScalingCurve> curves);

/// Writes `header` then each row joined with commas, LF line endings.
void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

}  // namespace bonlab::harness
