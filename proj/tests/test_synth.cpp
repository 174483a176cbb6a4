#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bonlab/diagnostics.hpp"
#include "bonlab/stats.hpp"
#include "bonlab/synth.hpp"

using namespace bonlab;

namespace {

std::vector<double> firsts(const std::vector<RewardPair>& pairs) {
  std::vector<double> out;
  for (const auto& p : pairs) out.push_back(p.true_score);
  return out;
}

std::vector<double> seconds(const std::vector<RewardPair>& pairs) {
  std::vector<double> out;
  for (const auto& p : pairs) out.push_back(p.predicted);
  return out;
}

PopulationSpec small_spec() {
  PopulationSpec s;
  s.n_users = 20;
  s.queries_per_user = 10;
  s.candidates_per_query = 8;
  s.collapse_fraction = 0.25;
  s.hacking_fraction = 0.3;
  s.seed = 17;
  return s;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("sample_rewards with zero sigma returns the mean") {
    RandomStream rng(1);
    for (double v : sample_rewards({0.42, 0.0, true}, 100, rng)) CHECK(v == 0.42);
  }

  TEST_CASE("sample_rewards mean converges within the CLT bound on two seeds") {
    for (std::uint64_t seed : {1u, 2u}) {
      RandomStream rng(seed);
      const auto xs = sample_rewards({0.3, 0.1, true}, 100000, rng);
      CHECK(std::abs(mean(xs) - 0.3) <= 0.002);
      CHECK(std::abs(stddev(xs) - 0.1) <= 0.002);
    }
  }

  TEST_CASE("clipped samples stay in the unit interval") {
    RandomStream rng(3);
    const auto xs = sample_rewards({0.95, 0.2, true}, 10000, rng);
    CHECK(*std::max_element(xs.begin(), xs.end()) <= 1.0);
    CHECK(*std::min_element(xs.begin(), xs.end()) >= 0.0);
  }

  TEST_CASE("sample_rewards rejects negative sigma") {
    RandomStream rng(3);
    CHECK_THROWS_AS(sample_rewards({0.5, -0.1, true}, 10, rng), std::invalid_argument);
  }

  TEST_CASE("correlated pairs reach the requested correlation") {
    const RewardSpec unclipped{0.0, 1.0, false};
    RandomStream rng(4);
    auto p1 = sample_correlated_pair(unclipped, 1.0, 1.0, 1000, rng);
    CHECK(pearson(firsts(p1), seconds(p1)).value == doctest::Approx(1.0).epsilon(1e-12));
    auto p9 = sample_correlated_pair(unclipped, 1.0, 0.9, 100000, rng);
    const double r9 = pearson(firsts(p9), seconds(p9)).value;
    CHECK(r9 >= 0.88);
    CHECK(r9 <= 0.92);
    auto p0 = sample_correlated_pair(unclipped, 1.0, 0.0, 100000, rng);
    CHECK(std::abs(pearson(firsts(p0), seconds(p0)).value) <= 0.02);
    CHECK_THROWS_AS(sample_correlated_pair(unclipped, 1.0, 1.01, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_correlated_pair(unclipped, 1.0, 0.5, 1, rng), std::invalid_argument);
  }

  TEST_CASE("population flags follow the requested fractions") {
    const PopulationSpec s = small_spec();
    const auto pop = generate_population(s);
    REQUIRE(pop.users.size() == 20);
    CHECK(std::count(pop.user_collapsed.begin(), pop.user_collapsed.end(), true) == 5);
    for (std::size_t u = 0; u < pop.users.size(); ++u) {
      const auto hacked = std::count(pop.query_hacked[u].begin(), pop.query_hacked[u].end(), true);
      CHECK(hacked == (pop.user_collapsed[u] ? 0 : 3));
      for (const auto& pool : pop.users[u].pools()) {
        CHECK(pool.size() == 8);
        CHECK(pool.has_predictions());
      }
    }
  }

  TEST_CASE("zero collapse fraction yields no collapsed flags") {
    PopulationSpec s = small_spec();
    s.collapse_fraction = 0.0;
    const auto pop = generate_population(s);
    CHECK(std::none_of(pop.user_collapsed.begin(), pop.user_collapsed.end(), [](bool b) { return b; }));
  }

  TEST_CASE("generation is deterministic and independent of thread count") {
    const PopulationSpec s = small_spec();
    const auto a = generate_population(s, 1);
    const auto b = generate_population(s, 1);
    const auto c = generate_population(s, 4);
    CHECK(a.users == b.users);
    CHECK(a.users == c.users);
    CHECK(a.user_collapsed == c.user_collapsed);
    CHECK(a.query_hacked == c.query_hacked);
  }

  TEST_CASE("invalid specs are rejected") {
    PopulationSpec s = small_spec();
    s.n_users = 0;
    CHECK_THROWS_AS(generate_population(s), std::invalid_argument);
    s = small_spec();
    s.candidates_per_query = 0;
    CHECK_THROWS_AS(generate_population(s), std::invalid_argument);
    s = small_spec();
    s.rho_plus = 0.0;
    CHECK_THROWS_AS(validate_population_spec(s), std::invalid_argument);
    s = small_spec();
    s.rho_minus = 0.1;
    CHECK_THROWS_AS(validate_population_spec(s), std::invalid_argument);
    s = small_spec();
    s.collapse_fraction = 1.5;
    CHECK_THROWS_AS(validate_population_spec(s), std::invalid_argument);
  }

  TEST_CASE("collapse fraction 0.2 on 200 users shows up in per-user correlations") {
    PopulationSpec s;
    s.collapse_fraction = 0.2;
    s.queries_per_user = 10;
    s.candidates_per_query = 10;
    s.seed = 5;
    const auto pop = generate_population(s);
    int low = 0;
    for (const auto& ds : pop.users) low += per_user_correlation(ds).value < 0.1 ? 1 : 0;
    CHECK(std::abs(low / 200.0 - 0.2) <= 0.05);
  }

  TEST_CASE("per-flag correlation converges as pools grow") {
    PopulationSpec s;
    s.n_users = 10;
    s.queries_per_user = 4;
    s.candidates_per_query = 2000;
    s.hacking_fraction = 0.5;
    s.base_reward = {0.5, 0.1, true};
    s.seed = 23;
    const auto pop = generate_population(s);
    for (std::size_t u = 0; u < pop.users.size(); ++u) {
      for (std::size_t q = 0; q < 4; ++q) {
        const double target = pop.query_hacked[u][q] ? s.rho_minus : s.rho_plus;
        CHECK(std::abs(per_query_correlation(pop.users[u].pools()[q]).value - target) < 0.07);
      }
    }
  }

  TEST_CASE("bivariate populations share true scores across rho") {
    PopulationSpec s = small_spec();
    const auto a = generate_bivariate_population(s, 0.5);
    const auto b = generate_bivariate_population(s, -0.5);
    for (std::size_t u = 0; u < a.users.size(); ++u) {
      for (std::size_t q = 0; q < a.users[u].pools().size(); ++q) {
        const auto& pa = a.users[u].pools()[q];
        const auto& pb = b.users[u].pools()[q];
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].true_score == pb[i].true_score);
      }
    }
  }
}
