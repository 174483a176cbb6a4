#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bonlab/rng.hpp"

namespace bonlab::prm {

inline constexpr double kVarMin = 1e-4;
inline constexpr double kVarMax = 0.5;

struct PrmShape {
  int input_dim = 16;
  int hidden = 32;

  bool operator==(const PrmShape&) const = default;
};

struct PrmOutput {
  double mu = 0.5;
  double var = kVarMin;
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardCache {
  std::vector<double> hidden;  // tanh activations
  double z_mu = 0.0;
  double z_var = 0.0;
  double softplus_var = 0.0;
  PrmOutput out;
};

struct InitConfig {
  /// Standard deviation of backbone weights is backbone_scale / sqrt(input_dim).
  double backbone_scale = 1.0;
  /// Standard deviation of both head weight vectors is head_scale / sqrt(hidden).
  double head_scale = 0.1;
  /// Initial mean-head output, applied through the head bias.
  double initial_mu = 0.5;
  /// Initial variance-head output, applied through the head bias.
  double initial_var = 0.01;
};

/// Two-head regressor. A tanh layer maps features x to a hidden vector h;
/// the mean head is sigmoid(w_mu . h + b_mu), the variance head is
/// clamp(softplus(w_var . h + b_var), kVarMin, kVarMax).
///
/// Parameters live in one flat vector laid out as
/// [W (hidden x input_dim, row-major) | b (hidden) | w_mu (hidden) | b_mu |
///  w_var (hidden) | b_var].
class PrmModel {
 public:
  /// All-zero parameters.
  explicit PrmModel(PrmShape shape);
  PrmModel(PrmShape shape, std::vector<double> params);

  static PrmModel initialize(PrmShape shape, const InitConfig& init, RandomStream& rng);

  const PrmShape& shape() const noexcept { return shape_; }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  static std::size_t parameter_count(PrmShape shape) noexcept;

  // Offsets into params().
  std::size_t w_backbone() const noexcept { return 0; }
  std::size_t b_backbone() const noexcept { return hid() * in(); }
  std::size_t w_mu() const noexcept { return b_backbone() + hid(); }
  std::size_t b_mu() const noexcept { return w_mu() + hid(); }
  std::size_t w_var() const noexcept { return b_mu() + 1; }
  std::size_t b_var() const noexcept { return w_var() + hid(); }
  /// True for weight entries (subject to weight decay), false for biases.
  bool is_weight(std::size_t index) const noexcept;

  PrmOutput forward(std::span<const double> features) const;
  PrmOutput forward(std::span<const double> features, ForwardCache& cache) const;

  bool operator==(const PrmModel&) const = default;

 private:
  std::size_t in() const noexcept { return static_cast<std::size_t>(shape_.input_dim); }
  std::size_t hid() const noexcept { return static_cast<std::size_t>(shape_.hidden); }

  PrmShape shape_;
  std::vector<double> params_;
};

double sigmoid(double z) noexcept;
double softplus(double z) noexcept;
double inverse_softplus(double y);

}  // namespace bonlab::prm
