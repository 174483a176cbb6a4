#pragma once

#include <numbers>
#include <span>
#include <string>

#include "bonlab/types.hpp"

namespace bonlab {

/// Coefficient of the sub-Gaussian expected-maximum bound
/// E[max X_i] <= mu + sigma * sqrt(2 ln N).
inline constexpr double kSubGaussianConstant = std::numbers::sqrt2;

/// Inputs of the unified scaling law. `scale` is the composite sigma_bar * c,
/// calibrated as a single number because the two factors are not separately
/// identifiable from a curve.
struct ScalingLawParams {
  double mu_bar = 0.0;
  double scale = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  double rho_collapsed = 0.0;
};

void validate_scaling_params(const ScalingLawParams& p);

/// sigma_bar * c with the theoretical constant c = sqrt(2).
inline double theoretical_scale(double sigma_bar, double c = kSubGaussianConstant) {
  return sigma_bar * c;
}

/// mu_bar + scale * sqrt(ln N) on every grid point.
ScalingCurve predict_oracle(double mu_bar, double scale, std::span<const int> n_grid,
                            std::string label = "oracle_law");

/// (1 - beta) * rho_plus - beta * |rho_minus|: effective correlation among
/// non-collapsed users.
double effective_correlation_inner(double beta, double rho_plus, double rho_minus);

/// (1 - alpha) * effective_correlation_inner(...): the population slope multiplier.
double effective_correlation(double alpha, double beta, double rho_plus, double rho_minus);

/// mu_bar + rho_eff * scale * sqrt(ln N).
ScalingCurve predict_unified(const ScalingLawParams& p, std::span<const int> n_grid,
                             std::string label = "unified_law");

/// mu_bar + [(1 - alpha) * rho_inner + alpha * rho_collapsed] * scale * sqrt(ln N).
ScalingCurve predict_refined(const ScalingLawParams& p, std::span<const int> n_grid,
                             std::string label = "refined_law");

struct ScaleFit {
  double mu_bar = 0.0;
  double scale = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of U(N) = a + b * sqrt(ln N). Needs two or more distinct N.
ScaleFit calibrate_scale(const ScalingCurve& curve);

struct PredictionScore {
  double rel_mae = 0.0;
  double r_squared = 0.0;
};

PredictionScore score_prediction(const ScalingCurve& predicted, const ScalingCurve& observed);

}  // namespace bonlab
