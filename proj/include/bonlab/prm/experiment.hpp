#pragma once

#include <map>
#include <string>
#include <vector>

#include "bonlab/diagnostics.hpp"
#include "bonlab/prm/features.hpp"
#include "bonlab/prm/loss.hpp"

namespace bonlab::prm {

struct FailureExperimentConfig {
  FeaturePopulationSpec population = default_failure_population();
  TrainConfig mse;
  TrainConfig nll;
  int hidden = 16;
  double collapse_threshold = kDefaultCollapseThreshold;
  CorrelationMode mode = CorrelationMode::Pooled;
};

/// Defaults used by the failure-mode recipe: identical settings for both
/// losses apart from loss_kind.
FailureExperimentConfig default_failure_experiment();

struct FailureUserRow {
  std::string user_id;
  std::string regime;
  double label_std = 0.0;
  double rho_mse = 0.0;
  double rho_nll = 0.0;
  /// Mean predicted variance of the NLL model over the user's eval candidates.
  double mean_var_nll = 0.0;
  int stop_epoch_mse = 0;
  int stop_epoch_nll = 0;
};

struct FailureExperimentResult {
  double alpha_mse = 0.0;
  double alpha_nll = 0.0;
  double beta_mse = 0.0;
  double beta_nll = 0.0;
  std::vector<FailureUserRow> users;
  /// Regime name -> mean of mean_var_nll over that regime's users.
  std::map<std::string, double> mean_var_nll_by_regime;
  DiagnosticReport mse_report;
  DiagnosticReport nll_report;
};

/// Trains one MSE and one NLL model per user on the train split (each user's
/// pair shares a derived seed when the two configs share a seed), scores the
/// held-out eval pools and compares collapse and hacking rates.
FailureExperimentResult failure_mode_experiment(const FailureExperimentConfig& config,
                                                unsigned threads = 1);

}  // namespace bonlab::prm
