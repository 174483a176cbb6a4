#include "bonlab/prm/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "bonlab/parallel.hpp"
#include "bonlab/rng.hpp"
#include "bonlab/stats.hpp"

namespace bonlab::prm {
namespace {

constexpr std::uint64_t kDirectionStream = 21;
constexpr std::uint64_t kCellStream = 22;

struct UserPlan {
  const FeatureRegime* regime;
  int index_in_regime;
};

std::vector<CandidatePool> make_pools(const FeaturePopulationSpec& spec, const FeatureRegime& regime,
                                      const std::string& user_id, const std::vector<double>& w,
                                      const RandomStream& root, std::uint64_t u, int q_begin,
                                      int n_queries, int n_candidates, std::vector<double>& labels) {
  const double a = std::sqrt(regime.signal_fraction);
  const double b = std::sqrt(1.0 - regime.signal_fraction);
  std::vector<CandidatePool> pools;
  pools.reserve(static_cast<std::size_t>(n_queries));
  for (int q = q_begin; q < q_begin + n_queries; ++q) {
    RandomStream rng = root.split({kCellStream, u, static_cast<std::uint64_t>(q)});
    std::vector<ScoredCandidate> cands(static_cast<std::size_t>(n_candidates));
    for (auto& c : cands) {
      c.features.resize(static_cast<std::size_t>(spec.feature_dim));
      double proj = 0.0;
      for (std::size_t k = 0; k < c.features.size(); ++k) {
        c.features[k] = rng.normal();
        proj += w[k] * c.features[k];
      }
      const double z = a * proj + b * rng.normal();
      c.true_score = std::clamp(regime.label_mean + regime.label_std * z, 0.0, 1.0);
      labels.push_back(c.true_score);
    }
    pools.emplace_back(user_id, "q" + std::to_string(q), std::move(cands));
  }
  return pools;
}

}  // namespace

void validate_feature_population_spec(const FeaturePopulationSpec& spec) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("feature population: " + msg); };
  if (spec.feature_dim < 1) fail("feature_dim must be >= 1");
  if (spec.train_queries < 1 || spec.eval_queries < 1) fail("query counts must be >= 1");
  if (spec.train_candidates < 2 || spec.eval_candidates < 2) fail("candidate counts must be >= 2");
  if (spec.regimes.empty()) fail("at least one regime is required");
  int total = 0;
  for (const auto& r : spec.regimes) {
    if (r.name.empty()) fail("regime names must be non-empty");
    if (r.n_users < 0) fail("regime " + r.name + ": n_users must be >= 0");
    if (!(r.label_mean >= 0.0 && r.label_mean <= 1.0)) fail("regime " + r.name + ": label_mean must lie in [0,1]");
    if (!(r.label_std > 0.0)) fail("regime " + r.name + ": label_std must be > 0");
    if (!(r.signal_fraction >= 0.0 && r.signal_fraction <= 1.0)) {
      fail("regime " + r.name + ": signal_fraction must lie in [0,1]");
    }
    total += r.n_users;
  }
  if (total < 1) fail("population has no users");
}

FeaturePopulationSpec default_failure_population() {
  FeaturePopulationSpec spec;
  spec.feature_dim = 8;
  spec.regimes = {{"low", 12, 0.3, 0.018, 0.3}, {"normal", 12, 0.5, 0.06, 1.0}};
  return spec;
}

std::vector<FeatureUser> generate_feature_population(const FeaturePopulationSpec& spec,
                                                     unsigned threads) {
  validate_feature_population_spec(spec);
  std::vector<UserPlan> plan;
  for (const auto& r : spec.regimes) {
    for (int k = 0; k < r.n_users; ++k) plan.push_back({&r, k});
  }

  const RandomStream root(spec.seed);
  std::vector<std::optional<FeatureUser>> users(plan.size());
  parallel_for(plan.size(), threads, [&](std::size_t i) {
    const FeatureRegime& regime = *plan[i].regime;
    const auto u = static_cast<std::uint64_t>(i);
    const std::string id = regime.name + "-" + std::to_string(plan[i].index_in_regime);

    RandomStream dir_rng = root.split({kDirectionStream, u});
    std::vector<double> w(static_cast<std::size_t>(spec.feature_dim));
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : w) v = dir_rng.normal();
      norm = 0.0;
      for (double v : w) norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : w) v /= norm;

    std::vector<double> labels;
    auto train = make_pools(spec, regime, id, w, root, u, 0, spec.train_queries,
                            spec.train_candidates, labels);
    auto eval = make_pools(spec, regime, id, w, root, u, spec.train_queries, spec.eval_queries,
                           spec.eval_candidates, labels);
    users[i] = FeatureUser{regime.name, UserDataset(id, std::move(train)),
                           UserDataset(id, std::move(eval)), stddev(labels)};
  });

  std::vector<FeatureUser> out;
  out.reserve(users.size());
  for (auto& u : users) out.push_back(std::move(*u));
  return out;
}

}  // namespace bonlab::prm
