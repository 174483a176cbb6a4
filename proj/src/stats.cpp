#include "bonlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bonlab {
namespace {

void require_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("correlation needs at least two points");
}

bool is_constant(std::span<const double> xs) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *lo == *hi;
}

void require_matching(const ScalingCurve& predicted, const ScalingCurve& observed) {
  if (observed.size() == 0) throw std::invalid_argument("observed curve is empty");
  if (!predicted.same_grid(observed)) {
    throw std::invalid_argument("predicted and observed curves use different N grids");
  }
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sequence");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  require_pair(xs, ys);
  // Exact equality test: a near-constant vector still carries ordering
  // information and is left to the product-moment formula.
  if (is_constant(xs) || is_constant(ys)) return Correlation::make_degenerate();

  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return Correlation::make_degenerate();
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), false};
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

Correlation spearman(std::span<const double> xs, std::span<const double> ys) {
  require_pair(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double rel_mae(const ScalingCurve& predicted, const ScalingCurve& observed) {
  require_matching(predicted, observed);
  double total = 0.0;
  const auto obs = observed.points();
  const auto pred = predicted.points();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].utility == 0.0) {
      throw std::domain_error("relative error undefined: observed utility is 0 at N=" +
                              std::to_string(obs[i].n));
    }
    total += std::abs(pred[i].utility - obs[i].utility) / std::abs(obs[i].utility);
  }
  return total / static_cast<double>(obs.size());
}

double r_squared(const ScalingCurve& predicted, const ScalingCurve& observed) {
  require_matching(predicted, observed);
  if (observed.size() < 2) throw std::invalid_argument("R^2 needs at least two points");
  const auto obs = observed.utilities();
  const auto pred = predicted.utilities();
  const double m = mean(obs);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ss_res += (obs[i] - pred[i]) * (obs[i] - pred[i]);
    ss_tot += (obs[i] - m) * (obs[i] - m);
  }
  if (ss_tot == 0.0) throw std::domain_error("R^2 undefined: observed curve is constant (SS_tot = 0)");
  return 1.0 - ss_res / ss_tot;
}

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_line inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("fit_line needs at least two points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line needs at least two distinct x values");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (xs.size() > 2) {
    fit.slope_stderr = std::sqrt(ss_res / static_cast<double>(xs.size() - 2) / sxx);
  }
  return fit;
}

}  // namespace bonlab
