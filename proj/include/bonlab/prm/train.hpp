#pragma once

#include <span>
#include <vector>

#include "bonlab/prm/loss.hpp"
#include "bonlab/prm/model.hpp"
#include "bonlab/types.hpp"

namespace bonlab::prm {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double data_term = 0.0;
  double contrastive = 0.0;
  double train_loss = 0.0;
  /// NaN when there is no validation split.
  double validation_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Last epoch run; equals epochs.size().
  int stop_epoch = 0;
  /// Epoch whose parameters were kept.
  int best_epoch = 0;
  bool early_stopped = false;
};

struct TrainResult {
  PrmModel model;
  TrainHistory history;
};

/// Every candidate of every pool as a training example, in pool order.
std::vector<Example> examples_from(const UserDataset& dataset);

/// Minibatch gradient descent on `train` with early stopping on
/// `validation` (pass an empty span to train for the full epoch budget).
/// Validation loss is total_loss averaged over consecutive batch_size chunks
/// of the validation set in its given order.
TrainResult train_model(PrmShape shape, std::span<const Example> train,
                        std::span<const Example> validation, const TrainConfig& config);

/// Splits the dataset's candidates into train and validation parts with a
/// seeded shuffle, then calls train_model. Hidden width comes from `hidden`.
TrainResult train_user_rm(const UserDataset& dataset, const TrainConfig& config, int hidden = 32);

/// Copy of `dataset` with pred_mean and pred_var filled from the model.
UserDataset score_dataset(const PrmModel& model, const UserDataset& dataset);

}  // namespace bonlab::prm
