#include "bonlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bonlab/parallel.hpp"

namespace bonlab {
namespace {

// Stream path tags.
constexpr std::uint64_t kTagAssign = 1;
constexpr std::uint64_t kTagUser = 2;
constexpr std::uint64_t kTagCell = 3;
constexpr std::uint64_t kTagHacking = 4;

std::string user_name(int u) { return "u" + std::to_string(u); }
std::string query_name(int q) { return "q" + std::to_string(q); }

struct CellPlan {
  double rho = 0.0;
  double pred_sigma = 0.0;
};

CandidatePool make_cell(const PopulationSpec& spec, int u, int q, double sigma_u,
                        const CellPlan& plan) {
  RandomStream rng = RandomStream(spec.seed).split(
      {kTagCell, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(q)});
  RewardSpec reward = spec.base_reward;
  reward.sigma = sigma_u;
  reward.clip_to_unit = true;
  double rho = plan.rho;
  if (spec.rho_spread > 0.0) {
    rho = std::clamp(rho + rng.uniform(-spec.rho_spread, spec.rho_spread), -1.0, 1.0);
  }
  const auto pairs = sample_correlated_pair(
      reward, plan.pred_sigma, rho, static_cast<std::size_t>(spec.candidates_per_query), rng);

  std::vector<ScoredCandidate> cands(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cands[i].true_score = pairs[i].true_score;
    cands[i].pred_mean = pairs[i].predicted;
    if (spec.emit_variance) {
      const double resid = pairs[i].predicted - pairs[i].true_score;
      cands[i].pred_var = 1e-4 + resid * resid * std::exp(0.5 * rng.normal());
    }
  }
  return CandidatePool(user_name(u), query_name(q), std::move(cands));
}

std::vector<double> user_sigmas(const PopulationSpec& spec) {
  std::vector<double> out(static_cast<std::size_t>(spec.n_users), spec.base_reward.sigma);
  if (spec.user_sigma_spread <= 0.0) return out;
  const RandomStream root(spec.seed);
  for (int u = 0; u < spec.n_users; ++u) {
    RandomStream rng = root.split({kTagUser, static_cast<std::uint64_t>(u)});
    out[static_cast<std::size_t>(u)] =
        spec.base_reward.sigma * (1.0 + spec.user_sigma_spread * rng.uniform(-1.0, 1.0));
  }
  return out;
}

SyntheticPopulation assemble(const PopulationSpec& spec, std::vector<bool> collapsed,
                             std::vector<std::vector<bool>> hacked,
                             std::vector<double> sigmas, const std::vector<std::vector<CellPlan>>& plans,
                             unsigned threads) {
  std::vector<std::vector<CandidatePool>> pools(static_cast<std::size_t>(spec.n_users));
  parallel_for(pools.size(), threads, [&](std::size_t u) {
    auto& row = pools[u];
    row.reserve(static_cast<std::size_t>(spec.queries_per_user));
    for (int q = 0; q < spec.queries_per_user; ++q) {
      row.push_back(make_cell(spec, static_cast<int>(u), q, sigmas[u],
                              plans[u][static_cast<std::size_t>(q)]));
    }
  });
  SyntheticPopulation pop;
  pop.users.reserve(pools.size());
  for (std::size_t u = 0; u < pools.size(); ++u) {
    pop.users.emplace_back(user_name(static_cast<int>(u)), std::move(pools[u]));
  }
  pop.user_collapsed = std::move(collapsed);
  pop.query_hacked = std::move(hacked);
  pop.user_sigma = std::move(sigmas);
  return pop;
}

}  // namespace

std::vector<double> sample_rewards(const RewardSpec& spec, std::size_t n, RandomStream& rng) {
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("reward sigma must be >= 0");
  if (n < 1) throw std::invalid_argument("sample_rewards needs n >= 1");
  std::vector<double> out(n);
  for (auto& x : out) {
    x = spec.mean + spec.sigma * rng.normal();
    if (spec.clip_to_unit) x = std::clamp(x, 0.0, 1.0);
  }
  return out;
}

std::vector<RewardPair> sample_correlated_pair(const RewardSpec& spec, double pred_sigma,
                                               double rho, std::size_t n, RandomStream& rng) {
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("|rho| must be <= 1");
  if (!(spec.sigma >= 0.0) || !(pred_sigma >= 0.0)) {
    throw std::invalid_argument("standard deviations must be >= 0");
  }
  if (n < 2) throw std::invalid_argument("sample_correlated_pair needs n >= 2");
  const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  std::vector<RewardPair> out(n);
  for (auto& p : out) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    p.true_score = spec.mean + spec.sigma * z1;
    if (spec.clip_to_unit) p.true_score = std::clamp(p.true_score, 0.0, 1.0);
    p.predicted = spec.mean + pred_sigma * (rho * z1 + ortho * z2);
  }
  return out;
}

void validate_population_spec(const PopulationSpec& spec) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("population: " + msg); };
  if (spec.n_users < 1) fail("n_users must be >= 1");
  if (spec.queries_per_user < 1) fail("queries_per_user must be >= 1");
  if (spec.candidates_per_query < 2) fail("candidates_per_query must be >= 2");
  if (!(spec.base_reward.sigma >= 0.0)) fail("reward sigma must be >= 0");
  if (!(spec.pred_sigma >= 0.0)) fail("pred_sigma must be >= 0");
  if (!(spec.collapse_fraction >= 0.0 && spec.collapse_fraction <= 1.0)) {
    fail("collapse_fraction must lie in [0,1]");
  }
  if (!(spec.hacking_fraction >= 0.0 && spec.hacking_fraction <= 1.0)) {
    fail("hacking_fraction must lie in [0,1]");
  }
  if (!(spec.rho_plus > 0.0 && spec.rho_plus <= 1.0)) fail("rho_plus must lie in (0,1]");
  if (!(spec.rho_minus >= -1.0 && spec.rho_minus < 0.0)) fail("rho_minus must lie in [-1,0)");
  if (!(std::abs(spec.rho_collapsed) <= 1.0)) fail("rho_collapsed must lie in [-1,1]");
  if (!(spec.collapsed_pred_scale >= 0.0)) fail("collapsed_pred_scale must be >= 0");
  if (!(spec.rho_spread >= 0.0)) fail("rho_spread must be >= 0");
  if (!(spec.user_sigma_spread >= 0.0 && spec.user_sigma_spread <= 1.0)) {
    fail("user_sigma_spread must lie in [0,1]");
  }
}

SyntheticPopulation generate_population(const PopulationSpec& spec, unsigned threads) {
  validate_population_spec(spec);
  const auto n_users = static_cast<std::size_t>(spec.n_users);
  const auto n_queries = static_cast<std::size_t>(spec.queries_per_user);
  const RandomStream root(spec.seed);
  auto sigmas = user_sigmas(spec);

  std::vector<std::size_t> order(n_users);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (spec.collapse_assignment == CollapseAssignment::Random) {
    RandomStream assign = root.split(kTagAssign);
    assign.shuffle(order);
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigmas[a] < sigmas[b]; });
  }
  const auto n_collapsed =
      static_cast<std::size_t>(std::floor(spec.collapse_fraction * static_cast<double>(n_users)));
  std::vector<bool> collapsed(n_users, false);
  for (std::size_t i = 0; i < n_collapsed; ++i) collapsed[order[i]] = true;

  const auto n_hacked = static_cast<std::size_t>(
      std::floor(spec.hacking_fraction * static_cast<double>(n_queries)));
  std::vector<std::vector<bool>> hacked(n_users, std::vector<bool>(n_queries, false));
  std::vector<std::vector<CellPlan>> plans(n_users, std::vector<CellPlan>(n_queries));
  for (std::size_t u = 0; u < n_users; ++u) {
    if (collapsed[u]) {
      for (auto& p : plans[u]) p = {spec.rho_collapsed, spec.pred_sigma * spec.collapsed_pred_scale};
      continue;
    }
    std::vector<std::size_t> qorder(n_queries);
    std::iota(qorder.begin(), qorder.end(), std::size_t{0});
    RandomStream qrng = root.split({kTagHacking, static_cast<std::uint64_t>(u)});
    qrng.shuffle(qorder);
    for (std::size_t i = 0; i < n_hacked; ++i) hacked[u][qorder[i]] = true;
    for (std::size_t q = 0; q < n_queries; ++q) {
      plans[u][q] = {hacked[u][q] ? spec.rho_minus : spec.rho_plus, spec.pred_sigma};
    }
  }
  return assemble(spec, std::move(collapsed), std::move(hacked), std::move(sigmas), plans, threads);
}

SyntheticPopulation generate_bivariate_population(const PopulationSpec& spec, double rho,
                                                  unsigned threads) {
  if (spec.n_users < 1 || spec.queries_per_user < 1 || spec.candidates_per_query < 2) {
    throw std::invalid_argument("population: empty shape");
  }
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("|rho| must be <= 1");
  const auto n_users = static_cast<std::size_t>(spec.n_users);
  const auto n_queries = static_cast<std::size_t>(spec.queries_per_user);
  std::vector<std::vector<CellPlan>> plans(
      n_users, std::vector<CellPlan>(n_queries, CellPlan{rho, spec.pred_sigma}));
  return assemble(spec, std::vector<bool>(n_users, false),
                  std::vector<std::vector<bool>>(n_users, std::vector<bool>(n_queries, false)),
                  user_sigmas(spec), plans, threads);
}

}  // namespace bonlab
