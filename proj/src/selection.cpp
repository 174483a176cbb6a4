#include "bonlab/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bonlab/parallel.hpp"

namespace bonlab {
namespace {

constexpr std::uint64_t kTagTrial = 11;
constexpr std::uint64_t kTagPick = 12;

double parse_param(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw std::invalid_argument("invalid " + std::string(what) + " parameter '" +
                                std::string(text) + "'");
  }
  return v;
}

std::string format_param(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double sigma_of(const ScoredCandidate& c) { return std::sqrt(*c.pred_var); }

double snr_score(const ScoredCandidate& c) {
  const double mu = *c.pred_mean;
  const double sd = sigma_of(c);
  if (sd > 0.0) return mu / sd;
  if (mu > 0.0) return std::numeric_limits<double>::infinity();
  if (mu < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

template <class Score>
std::size_t argmax(std::span<const ScoredCandidate> pool, std::span<const std::size_t> subset,
                   Score&& score) {
  std::size_t best = 0;
  double best_value = score(pool[subset[0]]);
  for (std::size_t k = 1; k < subset.size(); ++k) {
    const double v = score(pool[subset[k]]);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return best;
}

void check_fields(std::span<const ScoredCandidate> pool, std::span<const std::size_t> subset,
                  const Strategy& s) {
  for (std::size_t idx : subset) {
    const auto& c = pool[idx];
    if (s.needs_predictions() && !c.pred_mean) {
      throw std::invalid_argument("strategy " + to_string(s) + " requires pred_mean");
    }
    if (s.needs_variances() && !c.pred_var) {
      throw std::invalid_argument("strategy " + to_string(s) + " requires pred_var");
    }
  }
}

std::size_t var_filter(std::span<const ScoredCandidate> pool, std::span<const std::size_t> subset,
                       double p) {
  const std::size_t n = subset.size();
  // The epsilon keeps (1-p)*n from rounding up past an exact integer.
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((1.0 - p) * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> by_var(n);
  std::iota(by_var.begin(), by_var.end(), std::size_t{0});
  std::stable_sort(by_var.begin(), by_var.end(), [&](std::size_t a, std::size_t b) {
    return *pool[subset[a]].pred_var < *pool[subset[b]].pred_var;
  });
  std::vector<std::size_t> survivors(by_var.begin(), by_var.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(survivors.begin(), survivors.end());
  std::size_t best = survivors.front();
  for (std::size_t k : survivors) {
    if (*pool[subset[k]].pred_mean > *pool[subset[best]].pred_mean) best = k;
  }
  return best;
}

}  // namespace

Strategy Strategy::lcb(double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("LCB beta must be >= 0");
  return {Kind::Lcb, beta};
}

Strategy Strategy::ucb(double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("UCB beta must be >= 0");
  return {Kind::Ucb, beta};
}

Strategy Strategy::var_filter(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("VarFilter p must lie in [0,1)");
  return {Kind::VarFilter, p};
}

Strategy parse_strategy(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const bool has_param = colon != std::string_view::npos;
  const std::string_view arg = has_param ? text.substr(colon + 1) : std::string_view{};

  auto no_param = [&](Strategy s) {
    if (has_param) throw std::invalid_argument("strategy '" + std::string(name) + "' takes no parameter");
    return s;
  };
  auto need_param = [&]() {
    if (!has_param) throw std::invalid_argument("strategy '" + std::string(name) + "' needs a parameter");
    return parse_param(arg, name);
  };

  if (name == "oracle") return no_param(Strategy::oracle());
  if (name == "random") return no_param(Strategy::random());
  if (name == "mean") return no_param(Strategy::mean());
  if (name == "snr") return no_param(Strategy::snr());
  if (name == "lcb") return Strategy::lcb(need_param());
  if (name == "ucb") return Strategy::ucb(need_param());
  if (name == "varfilter") return Strategy::var_filter(need_param());
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

std::string to_string(const Strategy& s) {
  switch (s.kind) {
    case Strategy::Kind::Oracle: return "oracle";
    case Strategy::Kind::Random: return "random";
    case Strategy::Kind::Mean: return "mean";
    case Strategy::Kind::Lcb: return "lcb:" + format_param(s.param);
    case Strategy::Kind::Ucb: return "ucb:" + format_param(s.param);
    case Strategy::Kind::VarFilter: return "varfilter:" + format_param(s.param);
    case Strategy::Kind::Snr: return "snr";
  }
  return "?";
}

std::size_t select_best(std::span<const ScoredCandidate> pool, std::span<const std::size_t> subset,
                        const Strategy& strategy, RandomStream& rng) {
  if (subset.empty()) throw std::invalid_argument("cannot select from an empty candidate set");
  check_fields(pool, subset, strategy);
  const double beta = strategy.param;
  switch (strategy.kind) {
    case Strategy::Kind::Oracle:
      return argmax(pool, subset, [](const ScoredCandidate& c) { return c.true_score; });
    case Strategy::Kind::Random:
      return rng.uniform_index(subset.size());
    case Strategy::Kind::Mean:
      return argmax(pool, subset, [](const ScoredCandidate& c) { return *c.pred_mean; });
    case Strategy::Kind::Lcb:
      return argmax(pool, subset,
                    [beta](const ScoredCandidate& c) { return *c.pred_mean - beta * sigma_of(c); });
    case Strategy::Kind::Ucb:
      return argmax(pool, subset,
                    [beta](const ScoredCandidate& c) { return *c.pred_mean + beta * sigma_of(c); });
    case Strategy::Kind::VarFilter:
      return var_filter(pool, subset, strategy.param);
    case Strategy::Kind::Snr:
      return argmax(pool, subset, snr_score);
  }
  throw std::logic_error("unhandled strategy kind");
}

std::size_t select_best(const CandidatePool& pool, const Strategy& strategy, RandomStream& rng) {
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return select_best(pool.candidates(), all, strategy, rng);
}

ScalingCurve estimate_utility_curve(std::span<const UserDataset> datasets, const Strategy& strategy,
                                    const CurveRequest& request, unsigned threads) {
  validate_n_grid(request.n_grid);
  if (request.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (datasets.empty()) throw std::invalid_argument("no datasets to evaluate");
  const auto max_n = static_cast<std::size_t>(request.n_grid.back());
  for (const auto& ds : datasets) {
    if (ds.pools().empty()) throw std::invalid_argument("user " + ds.user_id() + " has no pools");
    for (const auto& pool : ds.pools()) {
      if (pool.size() < max_n) {
        throw std::invalid_argument("pool " + pool.user_id() + "/" + pool.query_id() + " has " +
                                    std::to_string(pool.size()) + " candidates, fewer than N=" +
                                    std::to_string(max_n));
      }
    }
  }

  const std::size_t n_points = request.n_grid.size();
  // per_user[u][k]: user u's mean utility at grid point k.
  std::vector<std::vector<double>> per_user(datasets.size(), std::vector<double>(n_points, 0.0));
  const RandomStream root(request.seed);

  parallel_for(datasets.size(), threads, [&](std::size_t u) {
    const auto pools = datasets[u].pools();
    std::vector<double> sums(n_points, 0.0);
    std::vector<std::size_t> perm, subset;
    for (std::size_t q = 0; q < pools.size(); ++q) {
      const auto cands = pools[q].candidates();
      for (int t = 0; t < request.trials; ++t) {
        RandomStream rng = root.split({kTagTrial, u, q, static_cast<std::uint64_t>(t)});
        RandomStream pick = root.split({kTagPick, u, q, static_cast<std::uint64_t>(t)});
        perm.resize(cands.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        // Partial Fisher-Yates: the first max_n slots form a uniform sample.
        for (std::size_t i = 0; i < max_n; ++i) {
          const std::size_t j = i + rng.uniform_index(perm.size() - i);
          std::swap(perm[i], perm[j]);
        }
        for (std::size_t k = 0; k < n_points; ++k) {
          const auto n = static_cast<std::size_t>(request.n_grid[k]);
          subset.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
          std::sort(subset.begin(), subset.end());
          const std::size_t chosen = select_best(cands, subset, strategy, pick);
          sums[k] += cands[subset[chosen]].true_score;
        }
      }
    }
    const double cells = static_cast<double>(pools.size()) * request.trials;
    for (std::size_t k = 0; k < n_points; ++k) per_user[u][k] = sums[k] / cells;
  });

  std::vector<CurvePoint> points(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    double total = 0.0;
    for (const auto& row : per_user) total += row[k];
    points[k] = {request.n_grid[k], total / static_cast<double>(datasets.size()), request.trials};
  }
  return ScalingCurve(to_string(strategy), std::move(points));
}

}  // namespace bonlab
