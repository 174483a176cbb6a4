#include "bonlab/prm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bonlab::prm {
namespace {

void check_shape(PrmShape shape) {
  if (shape.input_dim < 1 || shape.hidden < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
}

// Largest double below 1 and smallest positive normal: keeps mu strictly in (0,1)
// even where the logistic rounds to an endpoint.
constexpr double kMuLow = 0x1p-1022;
constexpr double kMuHigh = 1.0 - 0x1p-53;

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("softplus output must be positive");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

PrmModel::PrmModel(PrmShape shape) : shape_(shape) {
  check_shape(shape);
  params_.assign(parameter_count(shape), 0.0);
}

PrmModel::PrmModel(PrmShape shape, std::vector<double> params)
    : shape_(shape), params_(std::move(params)) {
  check_shape(shape);
  if (params_.size() != parameter_count(shape)) {
    throw std::invalid_argument("expected " + std::to_string(parameter_count(shape)) +
                                " parameters, got " + std::to_string(params_.size()));
  }
}

std::size_t PrmModel::parameter_count(PrmShape shape) noexcept {
  const auto in = static_cast<std::size_t>(shape.input_dim);
  const auto hid = static_cast<std::size_t>(shape.hidden);
  return hid * in + hid + 2 * (hid + 1);
}

PrmModel PrmModel::initialize(PrmShape shape, const InitConfig& init, RandomStream& rng) {
  PrmModel m(shape);
  auto p = m.params();
  const double backbone_sd = init.backbone_scale / std::sqrt(static_cast<double>(shape.input_dim));
  const double head_sd = init.head_scale / std::sqrt(static_cast<double>(shape.hidden));
  for (std::size_t i = m.w_backbone(); i < m.b_backbone(); ++i) p[i] = backbone_sd * rng.normal();
  for (std::size_t i = 0; i < m.hid(); ++i) p[m.w_mu() + i] = head_sd * rng.normal();
  for (std::size_t i = 0; i < m.hid(); ++i) p[m.w_var() + i] = head_sd * rng.normal();
  const double mu0 = std::clamp(init.initial_mu, 1e-6, 1.0 - 1e-6);
  p[m.b_mu()] = std::log(mu0 / (1.0 - mu0));
  p[m.b_var()] = inverse_softplus(std::clamp(init.initial_var, kVarMin, kVarMax));
  return m;
}

bool PrmModel::is_weight(std::size_t index) const noexcept {
  if (index < b_backbone()) return true;
  if (index >= w_mu() && index < b_mu()) return true;
  return index >= w_var() && index < b_var();
}

PrmOutput PrmModel::forward(std::span<const double> features) const {
  ForwardCache cache;
  return forward(features, cache);
}

PrmOutput PrmModel::forward(std::span<const double> x, ForwardCache& cache) const {
  if (x.size() != in()) {
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) +
                                " does not match model input " + std::to_string(in()));
  }
  const auto p = params();
  cache.hidden.resize(hid());
  double z_mu = p[b_mu()];
  double z_var = p[b_var()];
  for (std::size_t j = 0; j < hid(); ++j) {
    double a = p[b_backbone() + j];
    const double* row = p.data() + j * in();
    for (std::size_t k = 0; k < in(); ++k) a += row[k] * x[k];
    const double h = std::tanh(a);
    cache.hidden[j] = h;
    z_mu += p[w_mu() + j] * h;
    z_var += p[w_var() + j] * h;
  }
  cache.z_mu = z_mu;
  cache.z_var = z_var;
  cache.softplus_var = softplus(z_var);
  cache.out.mu = std::clamp(sigmoid(z_mu), kMuLow, kMuHigh);
  cache.out.var = std::clamp(cache.softplus_var, kVarMin, kVarMax);
  return cache.out;
}

}  // namespace bonlab::prm
