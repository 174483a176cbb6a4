#include "bonlab/prm/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bonlab::prm {
namespace {

// Stream tags under the config seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kEpochStream = 3;

double validation_loss(const PrmModel& model, std::span<const Example> validation,
                       const TrainConfig& config) {
  const auto bs = static_cast<std::size_t>(config.batch_size);
  double total = 0.0;
  std::size_t chunks = 0;
  for (std::size_t lo = 0; lo < validation.size(); lo += bs) {
    const std::size_t len = std::min(bs, validation.size() - lo);
    total += total_loss(model, validation.subspan(lo, len), config).total;
    ++chunks;
  }
  return total / static_cast<double>(chunks);
}

void check_examples(std::span<const Example> examples, PrmShape shape) {
  for (const auto& e : examples) {
    if (e.features.size() != static_cast<std::size_t>(shape.input_dim)) {
      throw std::invalid_argument("example feature dimension " + std::to_string(e.features.size()) +
                                  " does not match model input " + std::to_string(shape.input_dim));
    }
  }
}

}  // namespace

std::vector<Example> examples_from(const UserDataset& dataset) {
  std::vector<Example> out;
  out.reserve(dataset.candidate_count());
  for (const auto& pool : dataset.pools()) {
    for (const auto& c : pool.candidates()) out.push_back({c.features, c.true_score});
  }
  return out;
}

TrainResult train_model(PrmShape shape, std::span<const Example> train,
                        std::span<const Example> validation, const TrainConfig& config) {
  validate_train_config(config);
  if (train.empty()) throw std::invalid_argument("no training examples");
  check_examples(train, shape);
  check_examples(validation, shape);

  const RandomStream root(config.seed);
  RandomStream init_rng = root.split(kInitStream);
  PrmModel model = PrmModel::initialize(shape, config.init, init_rng);
  PrmModel best = model;

  const auto bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (train.size() + bs - 1) / bs;
  const auto total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
  const double warmup_steps = std::floor(config.warmup_fraction * total_steps);

  std::vector<double> grad, velocity(model.parameter_count(), 0.0);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  batch.reserve(bs);

  TrainHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    RandomStream shuffle_rng = root.split({kEpochStream, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t lo = 0; lo < order.size(); lo += bs, ++step) {
      batch.clear();
      for (std::size_t i = lo; i < std::min(lo + bs, order.size()); ++i) batch.push_back(train[order[i]]);
      const LossBreakdown lb = total_loss(model, batch, config, &grad);
      rec.data_term += lb.data_term;
      rec.contrastive += lb.contrastive;
      rec.train_loss += lb.total;

      double lr = config.learning_rate;
      if (warmup_steps > 0.0) lr *= std::min(1.0, static_cast<double>(step + 1) / warmup_steps);
      auto p = model.params();
      for (std::size_t i = 0; i < p.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] + grad[i];
        if (config.weight_decay > 0.0 && model.is_weight(i)) p[i] -= lr * config.weight_decay * p[i];
        p[i] -= lr * velocity[i];
      }
    }
    const auto n_batches = static_cast<double>(steps_per_epoch);
    rec.data_term /= n_batches;
    rec.contrastive /= n_batches;
    rec.train_loss /= n_batches;

    if (validation.empty()) {
      rec.validation_loss = std::numeric_limits<double>::quiet_NaN();
      best = model;
      history.best_epoch = epoch;
    } else {
      rec.validation_loss = validation_loss(model, validation, config);
      if (rec.validation_loss < best_val) {
        best_val = rec.validation_loss;
        best = model;
        history.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    history.epochs.push_back(rec);
    history.stop_epoch = epoch;
    if (config.patience > 0 && !validation.empty() && since_best >= config.patience) {
      history.early_stopped = epoch < config.epochs;
      break;
    }
  }
  return {std::move(best), std::move(history)};
}

TrainResult train_user_rm(const UserDataset& dataset, const TrainConfig& config, int hidden) {
  std::vector<Example> all = examples_from(dataset);
  if (all.empty()) throw std::invalid_argument("user " + dataset.user_id() + " has no candidates");
  if (all.front().features.empty()) {
    throw std::invalid_argument("user " + dataset.user_id() + " has no feature vectors");
  }
  const PrmShape shape{static_cast<int>(all.front().features.size()), hidden};

  RandomStream split_rng = RandomStream(config.seed).split(kSplitStream);
  split_rng.shuffle(all);
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(all.size())));
  n_val = std::min(n_val, all.size() - 1);
  const std::span<const Example> everything(all);
  return train_model(shape, everything.subspan(n_val), everything.first(n_val), config);
}

UserDataset score_dataset(const PrmModel& model, const UserDataset& dataset) {
  std::vector<CandidatePool> pools;
  pools.reserve(dataset.pools().size());
  std::vector<double> means, vars;
  for (const auto& pool : dataset.pools()) {
    means.clear();
    vars.clear();
    for (const auto& c : pool.candidates()) {
      const PrmOutput out = model.forward(c.features);
      means.push_back(out.mu);
      vars.push_back(out.var);
    }
    pools.push_back(pool.with_predictions(means, vars));
  }
  return UserDataset(dataset.user_id(), std::move(pools));
}

}  // namespace bonlab::prm
