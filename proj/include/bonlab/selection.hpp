#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bonlab/rng.hpp"
#include "bonlab/types.hpp"

namespace bonlab {

/// Best-of-N selection rule. `param` is beta for LCB/UCB and the filtered
/// fraction p for VarFilter; it is unused otherwise.
struct Strategy {
  enum class Kind { Oracle, Random, Mean, Lcb, Ucb, VarFilter, Snr };

  Kind kind = Kind::Oracle;
  double param = 0.0;

  static Strategy oracle() { return {Kind::Oracle, 0.0}; }
  static Strategy random() { return {Kind::Random, 0.0}; }
  static Strategy mean() { return {Kind::Mean, 0.0}; }
  static Strategy lcb(double beta);
  static Strategy ucb(double beta);
  static Strategy var_filter(double p);
  static Strategy snr() { return {Kind::Snr, 0.0}; }

  bool needs_predictions() const noexcept { return kind != Kind::Oracle && kind != Kind::Random; }
  bool needs_variances() const noexcept {
    return kind == Kind::Lcb || kind == Kind::Ucb || kind == Kind::VarFilter || kind == Kind::Snr;
  }

  bool operator==(const Strategy&) const = default;
};

/// Parses `oracle`, `random`, `mean`, `lcb:<beta>`, `ucb:<beta>`,
/// `varfilter:<p>` or `snr`.
Strategy parse_strategy(std::string_view text);
std::string to_string(const Strategy& s);

/// Index of the chosen candidate; ties resolve to the lowest index. `rng` is
/// consumed only by the Random strategy.
std::size_t select_best(const CandidatePool& pool, const Strategy& strategy, RandomStream& rng);

/// Same as above over the candidates `pool[subset[k]]`; returns a position k
/// within `subset`. Ties resolve to the lowest position.
std::size_t select_best(std::span<const ScoredCandidate> pool, std::span<const std::size_t> subset,
                        const Strategy& strategy, RandomStream& rng);

struct CurveRequest {
  std::vector<int> n_grid{1, 5, 10, 15, 20, 30};
  int trials = 3;
  std::uint64_t seed = 1;
};

/// Monte Carlo Best-of-N utility. Each (user, query, trial) draws one seeded
/// permutation of the pool; the N-candidate subsample is its first N entries,
/// so subsamples are nested across the grid. The utility at N is the mean
/// over users of each user's mean over (query, trial) of the selected true
/// score.
ScalingCurve estimate_utility_curve(std::span<const UserDataset> datasets, const Strategy& strategy,
                                    const CurveRequest& request, unsigned threads = 1);

}  // namespace bonlab
