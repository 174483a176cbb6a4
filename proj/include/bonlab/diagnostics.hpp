#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bonlab/stats.hpp"
#include "bonlab/types.hpp"

namespace bonlab {

inline constexpr double kDefaultCollapseThreshold = 0.1;

/// How a user's correlation is formed from their queries.
enum class CorrelationMode {
  Pooled,    // one Pearson over all (true, pred) pairs of the user
  Averaged,  // mean of the per-query correlations
};

CorrelationMode parse_correlation_mode(const std::string& text);
std::string to_string(CorrelationMode mode);

/// Pearson(true_score, pred_mean) for one user. Throws when any candidate
/// lacks a prediction or fewer than two candidates exist.
Correlation per_user_correlation(const UserDataset& dataset,
                                 CorrelationMode mode = CorrelationMode::Pooled);

/// Pearson(true_score, pred_mean) across the candidates of one query.
Correlation per_query_correlation(const CandidatePool& pool);

struct UserRho {
  std::string user_id;
  Correlation rho;
  bool collapsed = false;
};

struct QueryRho {
  std::string user_id;
  std::string query_id;
  Correlation rho;
  /// False for queries of collapsed users, which are excluded from beta.
  bool counted = false;
  bool hacked = false;
};

/// The four scaling-law quantities plus the collapsed-user mean correlation.
/// beta, rho_plus_mean and rho_minus_mean are measured over the queries of
/// non-collapsed users only. Degenerate correlations count as 0.
struct DiagnosticReport {
  std::vector<UserRho> per_user;
  std::vector<QueryRho> per_query;
  double alpha = 0.0;
  double beta = 0.0;
  double rho_plus_mean = 0.0;
  double rho_minus_mean = 0.0;
  double rho_collapsed_mean = 0.0;
  double collapse_threshold = kDefaultCollapseThreshold;
  CorrelationMode mode = CorrelationMode::Pooled;
  std::size_t n_collapsed = 0;
  std::size_t n_counted_queries = 0;
  std::size_t n_hacked = 0;

  std::map<std::string, double> per_user_rho() const;
};

DiagnosticReport compute_report(std::span<const UserDataset> datasets,
                                double collapse_threshold = kDefaultCollapseThreshold,
                                CorrelationMode mode = CorrelationMode::Pooled,
                                unsigned threads = 1);

/// Population mean reward: the mean over users of each user's mean true score,
/// weighted the same way as utility curves.
double mean_true_score(std::span<const UserDataset> datasets);

/// Smallest sigma satisfying the empirical sub-Gaussian MGF bound
/// mean(exp(l * (x - xbar))) <= exp(l^2 sigma^2 / 2) for every l in
/// +-{0.25, 0.5, 1, 2, 4} / std(x). Needs at least 10 samples.
double fit_subgaussian_sigma(std::span<const double> samples);

struct AssumptionCheck {
  double subgaussian_sigma_hat = 0.0;
  double linearity_slope = 0.0;
  double linearity_intercept = 0.0;
  double linearity_r2 = 0.0;
  double linearity_slope_stderr = 0.0;
  int bins = 10;
  std::vector<double> bin_centers;
  std::vector<double> bin_means;
};

/// Equal-count bins over sorted predictions; the mean prediction of each bin
/// is its centre, regressed against the bin's mean true score. Needs
/// bins >= 3 and at least 5 pairs per bin.
AssumptionCheck linearity_check(std::span<const double> predicted, std::span<const double> truth,
                                int bins = 10);

/// Sub-Gaussian fit on the user's true scores and the linearity check on
/// their (pred_mean, true_score) pairs.
AssumptionCheck check_assumptions(const UserDataset& dataset, int bins = 10);

/// Spearman(pred_var, |pred_mean - true_score|) over all candidates.
Correlation variance_error_correlation(std::span<const UserDataset> datasets);

struct LabelVarianceGroup {
  std::string group;  // "low" or "high"
  std::size_t n_users = 0;
  double mean_label_std = 0.0;
  double collapse_rate = 0.0;
};

/// Splits users into halves by the standard deviation of their true scores
/// (the low half gets floor(n/2) users) and reports the collapse rate of
/// each half. Throws when fewer than two users are given or a user is
/// missing from `per_user_rho`.
std::vector<LabelVarianceGroup> label_variance_split(std::span<const UserDataset> datasets,
                                                     const std::map<std::string, double>& per_user_rho,
                                                     double collapse_threshold = kDefaultCollapseThreshold);

}  // namespace bonlab
