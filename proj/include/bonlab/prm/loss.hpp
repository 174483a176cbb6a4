#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bonlab/prm/model.hpp"

namespace bonlab::prm {

enum class LossKind { Mse, Nll };

LossKind parse_loss_kind(const std::string& text);
std::string to_string(LossKind kind);

struct TrainConfig {
  LossKind loss_kind = LossKind::Nll;
  /// Weight of the contrastive term.
  double lambda = 1.0;
  /// Only pairs whose better member scores above tau contribute.
  double tau = 0.5;
  double margin = 0.02;
  /// Per-sample weight w(y) = lo + (hi - lo) * y.
  double weight_lo = 0.3;
  double weight_hi = 1.0;
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_size = 16;
  /// Early-stopping patience in epochs; 0 disables early stopping.
  int patience = 5;
  double warmup_fraction = 0.1;
  double momentum = 0.0;
  /// Decoupled decay applied to weights (not biases) at each step.
  double weight_decay = 0.0;
  double validation_fraction = 0.2;
  InitConfig init{};
  std::uint64_t seed = 1;
};

void validate_train_config(const TrainConfig& config);

struct Example {
  std::vector<double> features;
  double label = 0.0;
};

/// Gaussian negative log-likelihood 0.5 * log(var) + (y - mu)^2 / (2 var).
double nll_loss(double mu, double var, double y);

struct NllGrad {
  double d_mu = 0.0;
  double d_var = 0.0;
};

/// d/dmu = (mu - y) / var; d/dvar = 1/(2 var) - (y - mu)^2 / (2 var^2).
NllGrad nll_grad(double mu, double var, double y);

double mse_loss(double mu, double y);
double mse_grad(double mu, double y);

/// Sum over ordered pairs (i, j) with ys[i] > ys[j] and ys[i] > tau of
/// max(0, margin - (mus[i] - mus[j])).
double contrastive_loss(std::span<const double> mus, std::span<const double> ys, double tau,
                        double margin);

double sample_weight(const TrainConfig& config, double y) noexcept;

struct LossBreakdown {
  /// Mean over the batch of the weighted per-sample MSE or NLL.
  double data_term = 0.0;
  /// Batch-local contrastive sum (before multiplying by lambda).
  double contrastive = 0.0;
  double total = 0.0;
};

/// data_term + lambda * contrastive on one batch. When `grad` is non-null it
/// receives the analytic gradient with respect to model.params(),
/// backpropagated through both heads.
LossBreakdown total_loss(const PrmModel& model, std::span<const Example> batch,
                         const TrainConfig& config, std::vector<double>* grad = nullptr);

/// Central differences (L(theta + eps e_i) - L(theta - eps e_i)) / (2 eps) of
/// total_loss for every parameter.
std::vector<double> finite_difference_grad(const PrmModel& model, std::span<const Example> batch,
                                           const TrainConfig& config, double epsilon);

}  // namespace bonlab::prm
