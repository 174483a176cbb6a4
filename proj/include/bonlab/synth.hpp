#pragma once

#include <cstdint>
#include <vector>

#include "bonlab/rng.hpp"
#include "bonlab/types.hpp"

namespace bonlab {

/// Gaussian reward distribution, optionally clamped to [0,1]. Both the raw and
/// the clamped variable are sub-Gaussian with scale `sigma`.
struct RewardSpec {
  double mean = 0.3;
  double sigma = 0.1;
  bool clip_to_unit = true;
};

std::vector<double> sample_rewards(const RewardSpec& spec, std::size_t n, RandomStream& rng);

struct RewardPair {
  double true_score = 0.0;
  double predicted = 0.0;
};

/// Bivariate normal (true, predicted) pairs built by Cholesky factorisation:
/// true = mean + sigma*z1, predicted = mean + pred_sigma*(rho*z1 + sqrt(1-rho^2)*z2).
/// Only the true score is clamped when spec.clip_to_unit is set.
std::vector<RewardPair> sample_correlated_pair(const RewardSpec& spec, double pred_sigma,
                                               double rho, std::size_t n, RandomStream& rng);

enum class CollapseAssignment {
  Random,               // seeded shuffle of users
  LowestLabelVariance,  // users with the smallest reward scale collapse first
};

struct PopulationSpec {
  int n_users = 200;
  int queries_per_user = 50;
  int candidates_per_query = 30;
  /// Every generated true score is clamped to [0,1] regardless of
  /// base_reward.clip_to_unit, since candidate scores must lie in that range.
  RewardSpec base_reward{};
  double pred_sigma = 0.1;
  double collapse_fraction = 0.0;
  double hacking_fraction = 0.0;
  double rho_plus = 0.5;
  double rho_minus = -0.25;
  double rho_collapsed = 0.0;
  /// Collapsed users predict with pred_sigma * collapsed_pred_scale.
  double collapsed_pred_scale = 0.01;
  /// Per-query correlation spread: rho_q = clamp(rho_flag + U(-spread, spread)).
  /// Zero gives a point mass per flag.
  double rho_spread = 0.0;
  /// Per-user reward scale sigma_u = sigma * (1 + spread * U(-1, 1)).
  double user_sigma_spread = 0.0;
  CollapseAssignment collapse_assignment = CollapseAssignment::Random;
  /// Attach a heteroscedastic pred_var to every candidate.
  bool emit_variance = false;
  std::uint64_t seed = 1;
};

/// Throws std::invalid_argument when a field violates its invariant.
void validate_population_spec(const PopulationSpec& spec);

struct SyntheticPopulation {
  std::vector<UserDataset> users;
  std::vector<bool> user_collapsed;
  /// query_hacked[u][q]; always false for collapsed users.
  std::vector<std::vector<bool>> query_hacked;
  std::vector<double> user_sigma;
};

/// Builds the collapse/hacking mixture. The first floor(alpha * n_users) users
/// of a seeded permutation collapse; each non-collapsed user has
/// floor(beta * queries) hacked queries chosen by a per-user permutation.
/// Each (user, query) cell draws from its own stream, so the result does not
/// depend on `threads`.
SyntheticPopulation generate_population(const PopulationSpec& spec, unsigned threads = 1);

/// Every query of every user at the same correlation `rho`; the mixture
/// fractions of `spec` are ignored. Cells use the same streams as
/// generate_population, so populations that differ only in rho share their
/// true scores.
SyntheticPopulation generate_bivariate_population(const PopulationSpec& spec, double rho,
                                                  unsigned threads = 1);

}  // namespace bonlab
