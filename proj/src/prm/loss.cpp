#include "bonlab/prm/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace bonlab::prm {
namespace {

void require_positive_var(double var) {
  if (!(var > 0.0)) throw std::invalid_argument("variance must be > 0");
}

}  // namespace

LossKind parse_loss_kind(const std::string& text) {
  if (text == "mse") return LossKind::Mse;
  if (text == "nll") return LossKind::Nll;
  throw std::invalid_argument("unknown loss kind '" + text + "'");
}

std::string to_string(LossKind kind) { return kind == LossKind::Mse ? "mse" : "nll"; }

void validate_train_config(const TrainConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (!(c.lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(c.tau > 0.0 && c.tau < 1.0)) fail("tau must lie in (0,1)");
  if (!(c.margin > 0.0)) fail("margin must be > 0");
  if (!(c.weight_lo >= 0.0 && c.weight_hi >= c.weight_lo)) fail("weight range must satisfy 0 <= lo <= hi");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (c.epochs < 1) fail("epochs must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.patience < 0) fail("patience must be >= 0");
  if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction <= 1.0)) fail("warmup_fraction must lie in [0,1]");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) fail("momentum must lie in [0,1)");
  if (!(c.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    fail("validation_fraction must lie in [0,1)");
  }
}

double nll_loss(double mu, double var, double y) {
  require_positive_var(var);
  const double r = y - mu;
  return 0.5 * std::log(var) + r * r / (2.0 * var);
}

NllGrad nll_grad(double mu, double var, double y) {
  require_positive_var(var);
  const double r = y - mu;
  return {(mu - y) / var, (var - r * r) / (2.0 * var * var)};
}

double mse_loss(double mu, double y) { return (y - mu) * (y - mu); }

double mse_grad(double mu, double y) { return 2.0 * (mu - y); }

double contrastive_loss(std::span<const double> mus, std::span<const double> ys, double tau,
                        double margin) {
  if (mus.size() != ys.size()) throw std::invalid_argument("contrastive inputs differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!(ys[i] > tau)) continue;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (ys[i] > ys[j]) total += std::max(0.0, margin - (mus[i] - mus[j]));
    }
  }
  return total;
}

double sample_weight(const TrainConfig& config, double y) noexcept {
  return config.weight_lo + (config.weight_hi - config.weight_lo) * y;
}

LossBreakdown total_loss(const PrmModel& model, std::span<const Example> batch,
                         const TrainConfig& config, std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t n = batch.size();
  const auto inv_n = 1.0 / static_cast<double>(n);
  const bool nll = config.loss_kind == LossKind::Nll;

  std::vector<ForwardCache> caches(n);
  std::vector<double> mus(n), ys(n);
  std::vector<double> d_mu(n, 0.0), d_var(n, 0.0);

  LossBreakdown loss;
  for (std::size_t i = 0; i < n; ++i) {
    const PrmOutput out = model.forward(batch[i].features, caches[i]);
    const double y = batch[i].label;
    const double w = sample_weight(config, y) * inv_n;
    mus[i] = out.mu;
    ys[i] = y;
    if (nll) {
      loss.data_term += w * nll_loss(out.mu, out.var, y);
      const NllGrad g = nll_grad(out.mu, out.var, y);
      d_mu[i] = w * g.d_mu;
      d_var[i] = w * g.d_var;
    } else {
      loss.data_term += w * mse_loss(out.mu, y);
      d_mu[i] = w * mse_grad(out.mu, y);
    }
  }

  if (config.lambda > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(ys[i] > config.tau)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(ys[i] > ys[j])) continue;
        const double hinge = config.margin - (mus[i] - mus[j]);
        if (hinge > 0.0) {
          loss.contrastive += hinge;
          d_mu[i] -= config.lambda;
          d_mu[j] += config.lambda;
        }
      }
    }
  }
  loss.total = loss.data_term + config.lambda * loss.contrastive;
  if (grad == nullptr) return loss;

  grad->assign(model.parameter_count(), 0.0);
  auto& g = *grad;
  const auto p = model.params();
  const auto hid = static_cast<std::size_t>(model.shape().hidden);
  const auto in = static_cast<std::size_t>(model.shape().input_dim);
  std::vector<double> d_hidden(hid);
  for (std::size_t i = 0; i < n; ++i) {
    const ForwardCache& c = caches[i];
    const double s = sigmoid(c.z_mu);
    const double dz_mu = d_mu[i] * s * (1.0 - s);
    // The clamp passes gradient only strictly inside its range.
    const bool var_active = c.softplus_var > kVarMin && c.softplus_var < kVarMax;
    const double dz_var = var_active ? d_var[i] * sigmoid(c.z_var) : 0.0;

    g[model.b_mu()] += dz_mu;
    g[model.b_var()] += dz_var;
    for (std::size_t j = 0; j < hid; ++j) {
      g[model.w_mu() + j] += dz_mu * c.hidden[j];
      g[model.w_var() + j] += dz_var * c.hidden[j];
      const double dh = dz_mu * p[model.w_mu() + j] + dz_var * p[model.w_var() + j];
      d_hidden[j] = dh * (1.0 - c.hidden[j] * c.hidden[j]);
    }
    const auto& x = batch[i].features;
    for (std::size_t j = 0; j < hid; ++j) {
      const double da = d_hidden[j];
      if (da == 0.0) continue;
      g[model.b_backbone() + j] += da;
      double* row = g.data() + j * in;
      for (std::size_t k = 0; k < in; ++k) row[k] += da * x[k];
    }
  }
  return loss;
}

std::vector<double> finite_difference_grad(const PrmModel& model, std::span<const Example> batch,
                                           const TrainConfig& config, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  PrmModel probe = model;
  auto p = probe.params();
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + epsilon;
    const double up = total_loss(probe, batch, config).total;
    p[i] = saved - epsilon;
    const double down = total_loss(probe, batch, config).total;
    p[i] = saved;
    out[i] = (up - down) / (2.0 * epsilon);
  }
  return out;
}

}  // namespace bonlab::prm
