#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bonlab/types.hpp"

namespace bonlab::prm {

/// A group of users sharing a label distribution. Each user gets a random
/// unit direction w; a candidate with features x ~ N(0, I) is labelled
///   y = clamp(label_mean + label_std * (sqrt(f) * w.x + sqrt(1 - f) * eps), 0, 1)
/// with eps ~ N(0, 1) and f = signal_fraction.
struct FeatureRegime {
  std::string name;
  int n_users = 0;
  double label_mean = 0.5;
  double label_std = 0.1;
  double signal_fraction = 0.9;
};

struct FeaturePopulationSpec {
  int feature_dim = 16;
  int train_queries = 40;
  int train_candidates = 8;
  int eval_queries = 20;
  int eval_candidates = 20;
  std::vector<FeatureRegime> regimes;
  std::uint64_t seed = 1;
};

void validate_feature_population_spec(const FeaturePopulationSpec& spec);

/// Eight features and two regimes: 12 "low" users (mean 0.3, std 0.018,
/// f = 0.3) and 12 "normal" users (mean 0.5, std 0.06, f = 1).
FeaturePopulationSpec default_failure_population();

struct FeatureUser {
  std::string regime;
  UserDataset train;
  UserDataset eval;
  /// Sample standard deviation of every label the user received.
  double label_std = 0.0;
};

/// Users are numbered globally across regimes in declaration order and named
/// "<regime>-<k>". Each user's data depends only on (seed, user number).
std::vector<FeatureUser> generate_feature_population(const FeaturePopulationSpec& spec,
                                                     unsigned threads = 1);

}  // namespace bonlab::prm
