#pragma once

#include <span>
#include <vector>

#include "bonlab/types.hpp"

namespace bonlab {

/// A correlation coefficient, or the DEGENERATE marker when either input has
/// zero variance. Degenerate correlations carry value 0 so that collapse and
/// hacking counts treat a constant predictor as providing no signal.
struct Correlation {
  double value = 0.0;
  bool degenerate = false;

  static constexpr Correlation make_degenerate() noexcept { return {0.0, true}; }
  bool operator==(const Correlation&) const = default;
};

double mean(std::span<const double> xs);
/// Population (1/n) variance and standard deviation.
double variance(std::span<const double> xs);
double stddev(std::span<const double> xs);

/// Sample Pearson correlation. Requires equal lengths >= 2.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks; tied values share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation of average ranks.
Correlation spearman(std::span<const double> xs, std::span<const double> ys);

/// Mean of |pred - obs| / |obs| over matching grid points.
double rel_mae(const ScalingCurve& predicted, const ScalingCurve& observed);

/// 1 - SS_res / SS_tot of the observed curve against the prediction.
/// Throws std::domain_error when the observed curve is constant.
double r_squared(const ScalingCurve& predicted, const ScalingCurve& observed);

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  /// Standard error of the slope; 0 for an exact two-point fit.
  double slope_stderr = 0.0;
};

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys);

}  // namespace bonlab
