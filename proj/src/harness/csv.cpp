#include "bonlab/harness/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>

namespace bonlab::harness {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::optional<double> parse_real(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

// Feature column index for "f<k>", or -1.
int feature_index(std::string_view name) {
  if (name.size() < 2 || name.front() != 'f') return -1;
  int k = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc{} || ptr != name.data() + name.size() || k < 0) return -1;
  return k;
}

struct PoolBuilder {
  std::string query_id;
  std::vector<ScoredCandidate> candidates;
};

struct UserBuilder {
  std::string user_id;
  std::vector<PoolBuilder> pools;
  std::map<std::string, std::size_t> pool_index;
};

}  // namespace

std::string format_real(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::runtime_error("could not format real");
  return std::string(buf.data(), ptr);
}

void write_scores_csv(std::ostream& out, std::span<const UserDataset> datasets) {
  bool means = true, vars = true;
  std::size_t dim = 0;
  bool first = true;
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) {
      means = means && pool.has_predictions();
      vars = vars && pool.has_variances();
      for (const auto& c : pool.candidates()) {
        if (first) dim = c.features.size();
        if (c.features.size() != dim) throw std::invalid_argument("feature dimensions differ across candidates");
        first = false;
      }
    }
  }
  out << "user_id,query_id,candidate_id,true_score";
  if (means) out << ",pred_mean";
  if (vars) out << ",pred_var";
  for (std::size_t k = 0; k < dim; ++k) out << ",f" << k;
  out << '\n';
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& c = pool[i];
        out << ds.user_id() << ',' << pool.query_id() << ",c" << i << ',' << format_real(c.true_score);
        if (means) out << ',' << format_real(*c.pred_mean);
        if (vars) out << ',' << format_real(*c.pred_var);
        for (double f : c.features) out << ',' << format_real(f);
        out << '\n';
      }
    }
  }
}

std::vector<UserDataset> parse_scores_csv(std::istream& in, const std::string& source) {
  auto fail = [&](std::size_t row, const std::string& msg) -> DataError {
    return DataError(source + ": row " + std::to_string(row) + ": " + msg);
  };

  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);

  int col_user = -1, col_query = -1, col_cand = -1, col_true = -1, col_mean = -1, col_var = -1;
  std::map<int, int> feature_cols;  // feature index -> column
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const std::string_view h = header[static_cast<std::size_t>(i)];
    int* slot = nullptr;
    if (h == "user_id") slot = &col_user;
    else if (h == "query_id") slot = &col_query;
    else if (h == "candidate_id") slot = &col_cand;
    else if (h == "true_score") slot = &col_true;
    else if (h == "pred_mean") slot = &col_mean;
    else if (h == "pred_var") slot = &col_var;
    else if (const int k = feature_index(h); k >= 0) {
      if (!feature_cols.emplace(k, i).second) throw fail(1, "duplicate column '" + std::string(h) + "'");
      continue;
    } else {
      throw fail(1, "unknown column '" + std::string(h) + "'");
    }
    if (*slot >= 0) throw fail(1, "duplicate column '" + std::string(h) + "'");
    *slot = i;
  }
  for (const auto& [name, col] : {std::pair{"user_id", col_user}, std::pair{"query_id", col_query},
                                  std::pair{"candidate_id", col_cand}, std::pair{"true_score", col_true}}) {
    if (col < 0) throw fail(1, std::string("missing required column '") + name + "'");
  }
  int expected_k = 0;
  for (const auto& [k, col] : feature_cols) {
    if (k != expected_k++) throw fail(1, "feature columns must be f0..f" + std::to_string(feature_cols.size() - 1));
  }

  std::vector<UserBuilder> users;
  std::map<std::string, std::size_t> user_index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw fail(row, "expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(fields.size()));
    }
    auto field = [&](int col) { return fields[static_cast<std::size_t>(col)]; };
    const std::string user(field(col_user));
    const std::string query(field(col_query));
    if (user.empty() || query.empty()) throw fail(row, "empty user_id or query_id");

    auto number = [&](int col, const char* name) {
      const auto v = parse_real(field(col));
      if (!v || !std::isfinite(*v)) {
        throw fail(row, std::string("non-numeric ") + name + " '" + std::string(field(col)) + "'");
      }
      return *v;
    };
    ScoredCandidate c;
    c.true_score = number(col_true, "true_score");
    if (!(c.true_score >= 0.0 && c.true_score <= 1.0)) {
      throw fail(row, "true_score " + std::string(field(col_true)) + " outside [0,1]");
    }
    if (col_mean >= 0 && !field(col_mean).empty()) c.pred_mean = number(col_mean, "pred_mean");
    if (col_var >= 0 && !field(col_var).empty()) {
      c.pred_var = number(col_var, "pred_var");
      if (*c.pred_var < 0.0) throw fail(row, "negative pred_var");
    }
    for (const auto& [k, col] : feature_cols) c.features.push_back(number(col, "feature"));

    auto [uit, new_user] = user_index.emplace(user, users.size());
    if (new_user) users.push_back({user, {}, {}});
    UserBuilder& ub = users[uit->second];
    auto [pit, new_pool] = ub.pool_index.emplace(query, ub.pools.size());
    if (new_pool) ub.pools.push_back({query, {}});
    ub.pools[pit->second].candidates.push_back(std::move(c));
  }
  if (users.empty()) throw DataError(source + ": no data rows");

  std::vector<UserDataset> out;
  out.reserve(users.size());
  for (auto& ub : users) {
    std::vector<CandidatePool> pools;
    pools.reserve(ub.pools.size());
    for (auto& pb : ub.pools) pools.emplace_back(ub.user_id, pb.query_id, std::move(pb.candidates));
    out.emplace_back(ub.user_id, std::move(pools));
  }
  return out;
}

std::vector<UserDataset> ingest_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_scores_csv(in, path.string());
}

void write_curves_csv(std::ostream& out, std::span<const ScalingCurve> curves) {
  out << "label,n,utility,trials\n";
  for (const auto& curve : curves) {
    for (const auto& p : curve.points()) {
      out << curve.label() << ',' << p.n << ',' << format_real(p.utility) << ',' << p.trials << '\n';
    }
  }
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
}

}  // namespace bonlab::harness
