#include "bonlab/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bonlab/parallel.hpp"

namespace bonlab {
namespace {

void collect_pairs(const CandidatePool& pool, std::vector<double>& truth, std::vector<double>& pred) {
  for (const auto& c : pool.candidates()) {
    if (!c.pred_mean) {
      throw std::invalid_argument("pool " + pool.user_id() + "/" + pool.query_id() +
                                  " has candidates without predictions");
    }
    truth.push_back(c.true_score);
    pred.push_back(*c.pred_mean);
  }
}

double log_mean_exp(std::span<const double> centred, double lambda) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : centred) hi = std::max(hi, lambda * x);
  double acc = 0.0;
  for (double x : centred) acc += std::exp(lambda * x - hi);
  return hi + std::log(acc / static_cast<double>(centred.size()));
}

}  // namespace

CorrelationMode parse_correlation_mode(const std::string& text) {
  if (text == "pooled") return CorrelationMode::Pooled;
  if (text == "averaged") return CorrelationMode::Averaged;
  throw std::invalid_argument("unknown correlation mode '" + text + "'");
}

std::string to_string(CorrelationMode mode) {
  return mode == CorrelationMode::Pooled ? "pooled" : "averaged";
}

Correlation per_query_correlation(const CandidatePool& pool) {
  std::vector<double> truth, pred;
  collect_pairs(pool, truth, pred);
  return pearson(pred, truth);
}

Correlation per_user_correlation(const UserDataset& dataset, CorrelationMode mode) {
  if (dataset.pools().empty()) throw std::invalid_argument("user " + dataset.user_id() + " has no pools");
  if (mode == CorrelationMode::Averaged) {
    double total = 0.0;
    bool all_degenerate = true;
    for (const auto& pool : dataset.pools()) {
      const Correlation c = per_query_correlation(pool);
      total += c.value;
      all_degenerate = all_degenerate && c.degenerate;
    }
    if (all_degenerate) return Correlation::make_degenerate();
    return {total / static_cast<double>(dataset.pools().size()), false};
  }
  std::vector<double> truth, pred;
  for (const auto& pool : dataset.pools()) collect_pairs(pool, truth, pred);
  return pearson(pred, truth);
}

std::map<std::string, double> DiagnosticReport::per_user_rho() const {
  std::map<std::string, double> out;
  for (const auto& u : per_user) out[u.user_id] = u.rho.value;
  return out;
}

DiagnosticReport compute_report(std::span<const UserDataset> datasets, double collapse_threshold,
                                CorrelationMode mode, unsigned threads) {
  if (datasets.empty()) throw std::invalid_argument("diagnostics need at least one user");

  std::vector<UserRho> users(datasets.size());
  std::vector<std::vector<QueryRho>> queries(datasets.size());
  parallel_for(datasets.size(), threads, [&](std::size_t u) {
    const auto& ds = datasets[u];
    users[u].user_id = ds.user_id();
    users[u].rho = per_user_correlation(ds, mode);
    users[u].collapsed = users[u].rho.value < collapse_threshold;
    for (const auto& pool : ds.pools()) {
      QueryRho q;
      q.user_id = ds.user_id();
      q.query_id = pool.query_id();
      q.rho = per_query_correlation(pool);
      q.counted = !users[u].collapsed;
      q.hacked = q.counted && q.rho.value < 0.0;
      queries[u].push_back(std::move(q));
    }
  });

  DiagnosticReport report;
  report.collapse_threshold = collapse_threshold;
  report.mode = mode;
  double collapsed_sum = 0.0, plus_sum = 0.0, minus_sum = 0.0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    if (users[u].collapsed) {
      ++report.n_collapsed;
      collapsed_sum += users[u].rho.value;
    }
    for (const auto& q : queries[u]) {
      if (!q.counted) continue;
      ++report.n_counted_queries;
      if (q.hacked) {
        ++report.n_hacked;
        minus_sum += q.rho.value;
      } else {
        plus_sum += q.rho.value;
      }
    }
  }
  const std::size_t n_plus = report.n_counted_queries - report.n_hacked;
  report.alpha = static_cast<double>(report.n_collapsed) / static_cast<double>(users.size());
  report.beta = report.n_counted_queries > 0
                    ? static_cast<double>(report.n_hacked) / static_cast<double>(report.n_counted_queries)
                    : 0.0;
  report.rho_plus_mean = n_plus > 0 ? plus_sum / static_cast<double>(n_plus) : 0.0;
  report.rho_minus_mean = report.n_hacked > 0 ? minus_sum / static_cast<double>(report.n_hacked) : 0.0;
  report.rho_collapsed_mean =
      report.n_collapsed > 0 ? collapsed_sum / static_cast<double>(report.n_collapsed) : 0.0;

  report.per_user = std::move(users);
  for (auto& row : queries) {
    for (auto& q : row) report.per_query.push_back(std::move(q));
  }
  return report;
}

double mean_true_score(std::span<const UserDataset> datasets) {
  if (datasets.empty()) throw std::invalid_argument("mean reward needs at least one user");
  double total = 0.0;
  for (const auto& ds : datasets) {
    double user = 0.0;
    for (const auto& pool : ds.pools()) {
      double q = 0.0;
      for (const auto& c : pool.candidates()) q += c.true_score;
      user += q / static_cast<double>(pool.size());
    }
    total += user / static_cast<double>(ds.pools().size());
  }
  return total / static_cast<double>(datasets.size());
}

double fit_subgaussian_sigma(std::span<const double> samples) {
  if (samples.size() < 10) throw std::invalid_argument("sub-Gaussian fit needs at least 10 samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) return 0.0;
  const double m = mean(samples);
  const double sd = stddev(samples);
  std::vector<double> centred(samples.begin(), samples.end());
  for (double& x : centred) x -= m;

  // The bound at a given lambda holds iff sigma >= sqrt(2 ln M(lambda)) / |lambda|,
  // so the smallest admissible sigma is the maximum of that over the test grid.
  static constexpr std::array<double, 5> kMultipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
  double sigma = 0.0;
  for (double k : kMultipliers) {
    for (double sign : {-1.0, 1.0}) {
      const double lambda = sign * k / sd;
      const double log_mgf = std::max(0.0, log_mean_exp(centred, lambda));
      sigma = std::max(sigma, std::sqrt(2.0 * log_mgf) / std::abs(lambda));
    }
  }
  return sigma;
}

AssumptionCheck linearity_check(std::span<const double> predicted, std::span<const double> truth,
                                int bins) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("linearity inputs differ in length");
  if (bins < 3) throw std::invalid_argument("linearity check needs at least 3 bins");
  const auto n = predicted.size();
  if (n < static_cast<std::size_t>(bins) * 5) {
    throw std::invalid_argument("linearity check needs at least 5 pairs per bin");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return predicted[a] < predicted[b]; });

  AssumptionCheck out;
  out.bins = bins;
  const auto nb = static_cast<std::size_t>(bins);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = b * n / nb;
    const std::size_t hi = (b + 1) * n / nb;
    double sp = 0.0, st = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sp += predicted[order[i]];
      st += truth[order[i]];
    }
    const auto cnt = static_cast<double>(hi - lo);
    out.bin_centers.push_back(sp / cnt);
    out.bin_means.push_back(st / cnt);
  }
  const LinearFit fit = fit_line(out.bin_centers, out.bin_means);
  out.linearity_slope = fit.slope;
  out.linearity_intercept = fit.intercept;
  out.linearity_r2 = fit.r_squared;
  out.linearity_slope_stderr = fit.slope_stderr;
  return out;
}

AssumptionCheck check_assumptions(const UserDataset& dataset, int bins) {
  std::vector<double> truth, pred;
  for (const auto& pool : dataset.pools()) collect_pairs(pool, truth, pred);
  AssumptionCheck out = linearity_check(pred, truth, bins);
  out.subgaussian_sigma_hat = fit_subgaussian_sigma(truth);
  return out;
}

Correlation variance_error_correlation(std::span<const UserDataset> datasets) {
  std::vector<double> vars, errors;
  for (const auto& ds : datasets) {
    for (const auto& pool : ds.pools()) {
      for (const auto& c : pool.candidates()) {
        if (!c.pred_var || !c.pred_mean) {
          throw std::invalid_argument("variance/error correlation needs pred_mean and pred_var");
        }
        vars.push_back(*c.pred_var);
        errors.push_back(std::abs(*c.pred_mean - c.true_score));
      }
    }
  }
  return spearman(vars, errors);
}

std::vector<LabelVarianceGroup> label_variance_split(std::span<const UserDataset> datasets,
                                                     const std::map<std::string, double>& per_user_rho,
                                                     double collapse_threshold) {
  if (datasets.size() < 2) throw std::invalid_argument("label variance split needs at least two users");
  struct Row {
    double label_std;
    bool collapsed;
  };
  std::vector<Row> rows;
  for (const auto& ds : datasets) {
    const auto it = per_user_rho.find(ds.user_id());
    if (it == per_user_rho.end()) throw std::invalid_argument("no correlation for user " + ds.user_id());
    std::vector<double> ys;
    for (const auto& pool : ds.pools()) {
      for (const auto& c : pool.candidates()) ys.push_back(c.true_score);
    }
    rows.push_back({stddev(ys), it->second < collapse_threshold});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.label_std < b.label_std; });

  const std::size_t half = rows.size() / 2;
  auto summarise = [](std::string name, std::span<const Row> part) {
    LabelVarianceGroup g;
    g.group = std::move(name);
    g.n_users = part.size();
    double s = 0.0, c = 0.0;
    for (const auto& r : part) {
      s += r.label_std;
      c += r.collapsed ? 1.0 : 0.0;
    }
    g.mean_label_std = s / static_cast<double>(part.size());
    g.collapse_rate = c / static_cast<double>(part.size());
    return g;
  };
  const std::span<const Row> all(rows);
  return {summarise("low", all.first(half)), summarise("high", all.subspan(half))};
}

}  // namespace bonlab
