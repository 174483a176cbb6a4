#include "bonlab/scaling.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bonlab/stats.hpp"

namespace bonlab {
namespace {

double log_regressor(int n) { return std::sqrt(std::log(static_cast<double>(n))); }

ScalingCurve law_curve(double intercept, double slope, std::span<const int> n_grid,
                       std::string label) {
  validate_n_grid(n_grid);
  std::vector<CurvePoint> pts;
  pts.reserve(n_grid.size());
  for (int n : n_grid) pts.push_back({n, intercept + slope * log_regressor(n), 1});
  return ScalingCurve(std::move(label), std::move(pts));
}

}  // namespace

void validate_scaling_params(const ScalingLawParams& p) {
  if (!(p.scale >= 0.0)) throw std::invalid_argument("scale must be >= 0");
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  if (!(p.rho_plus >= 0.0)) throw std::invalid_argument("rho_plus must be >= 0");
  if (!(p.rho_minus <= 0.0)) throw std::invalid_argument("rho_minus must be <= 0");
}

ScalingCurve predict_oracle(double mu_bar, double scale, std::span<const int> n_grid,
                            std::string label) {
  if (!(scale >= 0.0)) throw std::invalid_argument("scale must be >= 0");
  return law_curve(mu_bar, scale, n_grid, std::move(label));
}

double effective_correlation_inner(double beta, double rho_plus, double rho_minus) {
  return (1.0 - beta) * rho_plus - beta * std::abs(rho_minus);
}

double effective_correlation(double alpha, double beta, double rho_plus, double rho_minus) {
  return (1.0 - alpha) * effective_correlation_inner(beta, rho_plus, rho_minus);
}

ScalingCurve predict_unified(const ScalingLawParams& p, std::span<const int> n_grid,
                             std::string label) {
  validate_scaling_params(p);
  const double rho = effective_correlation(p.alpha, p.beta, p.rho_plus, p.rho_minus);
  return law_curve(p.mu_bar, rho * p.scale, n_grid, std::move(label));
}

ScalingCurve predict_refined(const ScalingLawParams& p, std::span<const int> n_grid,
                             std::string label) {
  validate_scaling_params(p);
  const double rho = (1.0 - p.alpha) * effective_correlation_inner(p.beta, p.rho_plus, p.rho_minus) +
                     p.alpha * p.rho_collapsed;
  return law_curve(p.mu_bar, rho * p.scale, n_grid, std::move(label));
}

ScaleFit calibrate_scale(const ScalingCurve& curve) {
  if (curve.size() < 2) throw std::invalid_argument("calibration needs at least two curve points");
  std::vector<double> xs, ys;
  for (const auto& pt : curve.points()) {
    xs.push_back(log_regressor(pt.n));
    ys.push_back(pt.utility);
  }
  const LinearFit fit = fit_line(xs, ys);
  return {fit.intercept, fit.slope, fit.r_squared};
}

PredictionScore score_prediction(const ScalingCurve& predicted, const ScalingCurve& observed) {
  return {rel_mae(predicted, observed), r_squared(predicted, observed)};
}

}  // namespace bonlab
