#include "bonlab/prm/experiment.hpp"

#include <optional>
#include <stdexcept>

#include "bonlab/parallel.hpp"
#include "bonlab/prm/train.hpp"
#include "bonlab/rng.hpp"

namespace bonlab::prm {
namespace {

TrainConfig with_user_seed(TrainConfig config, std::size_t user) {
  config.seed = mix64(config.seed ^ mix64(static_cast<std::uint64_t>(user) + 1));
  return config;
}

double mean_variance(const UserDataset& scored) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& pool : scored.pools()) {
    for (const auto& c : pool.candidates()) {
      total += *c.pred_var;
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace

FailureExperimentConfig default_failure_experiment() {
  FailureExperimentConfig config;
  config.hidden = 16;
  for (TrainConfig* c : {&config.mse, &config.nll}) {
    // Plain gradient descent on NLL is unstable once lr / var gets large, so
    // the rate is small and patience long enough for the variance head to settle.
    c->learning_rate = 0.005;
    c->epochs = 200;
    c->batch_size = 16;
    c->patience = 20;
    c->init.initial_var = 1e-3;
  }
  config.mse.loss_kind = LossKind::Mse;
  config.nll.loss_kind = LossKind::Nll;
  return config;
}

FailureExperimentResult failure_mode_experiment(const FailureExperimentConfig& config,
                                                unsigned threads) {
  if (config.mse.loss_kind != LossKind::Mse || config.nll.loss_kind != LossKind::Nll) {
    throw std::invalid_argument("failure experiment needs an mse config and an nll config");
  }
  validate_train_config(config.mse);
  validate_train_config(config.nll);
  if (config.hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  const auto population = generate_feature_population(config.population, threads);
  if (population.size() < 2) throw std::invalid_argument("failure experiment needs at least two users");

  const std::size_t n = population.size();
  std::vector<std::optional<UserDataset>> scored_mse(n), scored_nll(n);
  std::vector<FailureUserRow> rows(n);
  parallel_for(n, threads, [&](std::size_t u) {
    const FeatureUser& user = population[u];
    const TrainResult mse = train_user_rm(user.train, with_user_seed(config.mse, u), config.hidden);
    const TrainResult nll = train_user_rm(user.train, with_user_seed(config.nll, u), config.hidden);
    scored_mse[u] = score_dataset(mse.model, user.eval);
    scored_nll[u] = score_dataset(nll.model, user.eval);

    FailureUserRow& row = rows[u];
    row.user_id = user.train.user_id();
    row.regime = user.regime;
    row.label_std = user.label_std;
    row.rho_mse = per_user_correlation(*scored_mse[u], config.mode).value;
    row.rho_nll = per_user_correlation(*scored_nll[u], config.mode).value;
    row.mean_var_nll = mean_variance(*scored_nll[u]);
    row.stop_epoch_mse = mse.history.stop_epoch;
    row.stop_epoch_nll = nll.history.stop_epoch;
  });

  std::vector<UserDataset> mse_sets, nll_sets;
  mse_sets.reserve(n);
  nll_sets.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    mse_sets.push_back(std::move(*scored_mse[u]));
    nll_sets.push_back(std::move(*scored_nll[u]));
  }

  FailureExperimentResult result;
  result.mse_report = compute_report(mse_sets, config.collapse_threshold, config.mode, threads);
  result.nll_report = compute_report(nll_sets, config.collapse_threshold, config.mode, threads);
  result.alpha_mse = result.mse_report.alpha;
  result.alpha_nll = result.nll_report.alpha;
  result.beta_mse = result.mse_report.beta;
  result.beta_nll = result.nll_report.beta;

  std::map<std::string, std::pair<double, int>> sums;
  for (const auto& row : rows) {
    auto& [total, count] = sums[row.regime];
    total += row.mean_var_nll;
    ++count;
  }
  for (const auto& [name, s] : sums) result.mean_var_nll_by_regime[name] = s.first / s.second;
  result.users = std::move(rows);
  return result;
}

}  // namespace bonlab::prm
