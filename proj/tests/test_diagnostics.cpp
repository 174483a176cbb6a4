#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bonlab/diagnostics.hpp"
#include "bonlab/rng.hpp"
#include "bonlab/stats.hpp"
#include "bonlab/synth.hpp"

using namespace bonlab;

namespace {

// Truth on an even grid in [0.1, 0.9]; predictions built by Gram-Schmidt so the
// sample Pearson correlation equals r exactly (up to rounding).
std::pair<std::vector<double>, std::vector<double>> exact_pairs(double r, std::size_t n, std::uint64_t seed) {
  std::vector<double> t(n), z(n);
  RandomStream rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = 0.1 + 0.8 * static_cast<double>(i) / static_cast<double>(n - 1);
    z[i] = rng.normal();
  }
  const double mt = mean(t), mz = mean(z);
  double tt = 0, tz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tt += (t[i] - mt) * (t[i] - mt);
    tz += (t[i] - mt) * (z[i] - mz);
  }
  double zz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = z[i] - mz - tz / tt * (t[i] - mt);
    zz += z[i] * z[i];
  }
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = r * (t[i] - mt) / std::sqrt(tt) + std::sqrt(1 - r * r) * z[i] / std::sqrt(zz);
  }
  return {t, p};
}

CandidatePool pool_of(const std::string& user, const std::string& query, const std::vector<double>& t,
                      const std::vector<double>& p, const std::vector<double>* v = nullptr) {
  std::vector<ScoredCandidate> cands;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ScoredCandidate c{t[i], p[i], {}, {}};
    if (v) c.pred_var = (*v)[i];
    cands.push_back(c);
  }
  return CandidatePool(user, query, std::move(cands));
}

UserDataset user_at(const std::string& id, double r, std::uint64_t seed) {
  auto [t, p] = exact_pairs(r, 40, seed);
  return UserDataset(id, {pool_of(id, "q0", t, p)});
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("per-user and per-query correlation examples") {
    const std::vector<double> t{0.1, 0.4, 0.3, 0.8};
    const auto same = pool_of("u", "q", t, t);
    CHECK(per_query_correlation(same).value == doctest::Approx(1.0));
    CHECK(per_user_correlation(UserDataset("u", {same})).value == doctest::Approx(1.0));

    const auto flat = pool_of("u", "q", t, {0.5, 0.5, 0.5, 0.5});
    const auto d = per_user_correlation(UserDataset("u", {flat}));
    CHECK(d.degenerate);
    CHECK(d.value == 0.0);

    const CandidatePool bare("u", "q", {{0.1, {}, {}, {}}, {0.2, {}, {}, {}}});
    CHECK_THROWS_AS(per_query_correlation(bare), std::invalid_argument);
  }

  TEST_CASE("a synthetic user at rho 0.5 with 1000 pairs lands in the Fisher-z interval") {
    RandomStream rng(3);
    const auto pairs = sample_correlated_pair({0.5, 0.1, false}, 0.1, 0.5, 1000, rng);
    std::vector<double> t, p;
    for (const auto& pr : pairs) {
      t.push_back(std::clamp(pr.true_score, 0.0, 1.0));
      p.push_back(pr.predicted);
    }
    std::vector<CandidatePool> pools;
    for (std::size_t q = 0; q < 10; ++q) {
      const auto b = static_cast<std::ptrdiff_t>(q * 100), e = b + 100;
      pools.push_back(pool_of("u", "q" + std::to_string(q), {t.begin() + b, t.begin() + e},
                              {p.begin() + b, p.begin() + e}));
    }
    const double r = per_user_correlation(UserDataset("u", pools)).value;
    CHECK(r >= 0.44);
    CHECK(r <= 0.56);
  }

  TEST_CASE("pooled and averaged modes differ when query offsets vary") {
    const std::vector<double> t{0.1, 0.2, 0.3};
    const auto a = pool_of("u", "a", t, {0.1, 0.2, 0.3});
    const auto b = pool_of("u", "b", {0.6, 0.7, 0.8}, {0.0, 0.05, 0.1});
    const UserDataset ds("u", {a, b});
    CHECK(per_user_correlation(ds, CorrelationMode::Averaged).value == doctest::Approx(1.0));
    CHECK(per_user_correlation(ds, CorrelationMode::Pooled).value < 0.0);
    CHECK(parse_correlation_mode("averaged") == CorrelationMode::Averaged);
    CHECK_THROWS_AS(parse_correlation_mode("median"), std::invalid_argument);
  }

  TEST_CASE("compute_report counts collapse and hacking") {
    std::vector<UserDataset> users;
    for (int i = 0; i < 4; ++i) users.push_back(user_at("u" + std::to_string(i), 0.5, i + 1));
    CHECK(compute_report(users).alpha == 0.0);

    std::vector<UserDataset> mixed{user_at("a", 0.05, 1), user_at("b", 0.5, 2), user_at("c", 0.5, 3),
                                   user_at("d", 0.05, 4)};
    const auto rep = compute_report(mixed);
    CHECK(rep.alpha == 0.5);
    CHECK(rep.n_collapsed == 2);
    CHECK(rep.rho_collapsed_mean == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(rep.beta == 0.0);
    CHECK(rep.rho_plus_mean == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.n_counted_queries == 2);

    // One hacked query at -0.3 next to one at 0.6 for a user that is not collapsed.
    auto [t1, p1] = exact_pairs(0.6, 40, 7);
    auto [t2, p2] = exact_pairs(-0.3, 40, 8);
    std::vector<UserDataset> hack{UserDataset("h", {pool_of("h", "q1", t1, p1), pool_of("h", "q2", t2, p2)})};
    const auto hr = compute_report(hack, 0.0);
    CHECK(hr.beta == 0.5);
    CHECK(hr.rho_minus_mean == doctest::Approx(-0.3).epsilon(1e-9));
    CHECK(hr.rho_plus_mean == doctest::Approx(0.6).epsilon(1e-9));

    CHECK_THROWS_AS(compute_report(std::vector<UserDataset>{}), std::invalid_argument);
  }

  TEST_CASE("lowering the collapse threshold never increases alpha") {
    PopulationSpec s;
    s.n_users = 40;
    s.queries_per_user = 8;
    s.candidates_per_query = 10;
    s.collapse_fraction = 0.3;
    s.hacking_fraction = 0.3;
    s.rho_spread = 0.3;
    s.seed = 12;
    const auto pop = generate_population(s).users;
    double prev = 2.0;
    for (double tau : {0.5, 0.3, 0.2, 0.1, 0.0, -0.2}) {
      const double a = compute_report(pop, tau).alpha;
      CHECK(a <= prev);
      prev = a;
    }
  }

  TEST_CASE("report is independent of thread count") {
    PopulationSpec s;
    s.n_users = 20;
    s.queries_per_user = 10;
    s.candidates_per_query = 10;
    s.collapse_fraction = 0.2;
    s.hacking_fraction = 0.3;
    const auto pop = generate_population(s).users;
    const auto a = compute_report(pop, 0.1, CorrelationMode::Pooled, 1);
    const auto b = compute_report(pop, 0.1, CorrelationMode::Pooled, 4);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    CHECK(a.rho_plus_mean == b.rho_plus_mean);
    CHECK(a.per_user_rho() == b.per_user_rho());
  }

  TEST_CASE("sub-Gaussian fit examples") {
    const std::vector<double> flat(20, 0.4);
    CHECK(fit_subgaussian_sigma(flat) == 0.0);
    CHECK_THROWS_AS(fit_subgaussian_sigma(std::vector<double>(9, 0.1)), std::invalid_argument);

    std::vector<double> rad;
    for (int i = 0; i < 1000; ++i) rad.push_back(i % 2 == 0 ? 1.0 : -1.0);
    CHECK(fit_subgaussian_sigma(rad) <= 1.0);

    RandomStream rng(4);
    std::vector<double> z(100000);
    for (auto& v : z) v = rng.normal();
    const double s = fit_subgaussian_sigma(z);
    CHECK(s >= 0.95);
    CHECK(s <= 1.15);

    std::vector<double> z3;
    for (double v : z) z3.push_back(3.0 * v);
    CHECK(fit_subgaussian_sigma(z3) == doctest::Approx(3.0 * s).epsilon(1e-9));
  }

  TEST_CASE("linearity check examples") {
    std::vector<double> pred, truth;
    for (int i = 0; i < 100; ++i) {
      pred.push_back(i / 100.0);
      truth.push_back(2.0 * i / 100.0);
    }
    const auto exact = linearity_check(pred, truth);
    CHECK(exact.linearity_slope == doctest::Approx(2.0));
    CHECK(exact.linearity_r2 == doctest::Approx(1.0));
    CHECK(exact.bin_centers.size() == 10);

    RandomStream rng(5);
    for (double rho : {0.0, 0.6}) {
      const auto pairs = sample_correlated_pair({0.0, 1.0, false}, 1.0, rho, 10000, rng);
      std::vector<double> t, p;
      for (const auto& pr : pairs) {
        t.push_back(pr.true_score);
        p.push_back(pr.predicted);
      }
      const auto c = linearity_check(p, t);
      CHECK(std::abs(c.linearity_slope - rho) <= 3.0 * c.linearity_slope_stderr);
      if (rho > 0) {
        CHECK(c.linearity_slope >= 0.54);
        CHECK(c.linearity_slope <= 0.66);
      }
    }

    CHECK_THROWS_AS(linearity_check(pred, truth, 2), std::invalid_argument);
    CHECK_THROWS_AS(linearity_check(std::vector<double>(20, 0.1), std::vector<double>(20, 0.1)),
                    std::invalid_argument);
  }

  TEST_CASE("variance/error correlation examples") {
    const std::vector<double> t{0.1, 0.4, 0.3, 0.8, 0.5};
    const std::vector<double> p{0.2, 0.1, 0.35, 0.4, 0.5};
    std::vector<double> v;
    for (std::size_t i = 0; i < t.size(); ++i) v.push_back((p[i] - t[i]) * (p[i] - t[i]));
    std::vector<UserDataset> exact{UserDataset("u", {pool_of("u", "q", t, p, &v)})};
    CHECK(variance_error_correlation(exact).value == doctest::Approx(1.0));

    const std::vector<double> flat(5, 0.01);
    std::vector<UserDataset> constant{UserDataset("u", {pool_of("u", "q", t, p, &flat)})};
    const auto c = variance_error_correlation(constant);
    CHECK(c.degenerate);
    CHECK(c.value == 0.0);

    std::vector<UserDataset> none{UserDataset("u", {pool_of("u", "q", t, p)})};
    CHECK_THROWS_AS(variance_error_correlation(none), std::invalid_argument);
  }

  TEST_CASE("label variance split") {
    PopulationSpec s;
    s.n_users = 40;
    s.queries_per_user = 10;
    s.candidates_per_query = 10;
    s.collapse_fraction = 0.3;
    s.user_sigma_spread = 0.8;
    s.collapse_assignment = CollapseAssignment::LowestLabelVariance;
    s.seed = 6;
    const auto pop = generate_population(s).users;
    const auto rep = compute_report(pop);
    const auto groups = label_variance_split(pop, rep.per_user_rho());
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].group == "low");
    CHECK(groups[0].n_users == 20);
    CHECK(groups[0].mean_label_std < groups[1].mean_label_std);
    CHECK(groups[0].collapse_rate > groups[1].collapse_rate);

    std::vector<UserDataset> two{user_at("a", 0.5, 1), user_at("b", 0.05, 2)};
    const auto g2 = label_variance_split(two, compute_report(two).per_user_rho());
    CHECK(g2[0].n_users == 1);
    CHECK(g2[1].n_users == 1);
    CHECK_THROWS_AS(label_variance_split(std::vector<UserDataset>{two[0]}, {}), std::invalid_argument);
    CHECK_THROWS_AS(label_variance_split(two, {}), std::invalid_argument);
  }

  TEST_CASE("uniform collapse assignment gives similar rates per half") {
    PopulationSpec s;
    s.n_users = 400;
    s.queries_per_user = 5;
    s.candidates_per_query = 10;
    s.collapse_fraction = 0.3;
    s.user_sigma_spread = 0.8;
    s.seed = 7;
    const auto pop = generate_population(s).users;
    const auto groups = label_variance_split(pop, compute_report(pop).per_user_rho());
    // Two binomial halves of 200 at p = 0.3: sd of the difference about 0.046.
    CHECK(std::abs(groups[0].collapse_rate - groups[1].collapse_rate) <= 0.14);
  }

  TEST_CASE("generator round-trip recovers the mixture") {
    PopulationSpec s;
    s.collapse_fraction = 0.2;
    s.hacking_fraction = 0.3;
    s.rho_plus = 0.5;
    s.rho_minus = -0.25;
    s.seed = 11;
    const auto rep = compute_report(generate_population(s, 4).users);
    CHECK(std::abs(rep.alpha - 0.2) <= 0.05);
    CHECK(std::abs(rep.beta - 0.3) <= 0.05);
    CHECK(std::abs(rep.rho_plus_mean - 0.5) <= 0.05);
    CHECK(std::abs(rep.rho_minus_mean + 0.25) <= 0.05);
  }

  TEST_CASE("mean true score averages users equally") {
    const auto a = pool_of("a", "q", {0.2, 0.4}, {0.0, 0.0});
    const auto b1 = pool_of("b", "q1", {0.8, 0.8}, {0.0, 0.0});
    const auto b2 = pool_of("b", "q2", {0.6, 0.6}, {0.0, 0.0});
    const std::vector<UserDataset> users{UserDataset("a", {a}), UserDataset("b", {b1, b2})};
    CHECK(mean_true_score(users) == doctest::Approx(0.5));
  }
}
