#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bonlab/rng.hpp"
#include "bonlab/stats.hpp"
#include "bonlab/types.hpp"

using namespace bonlab;

namespace {

// Textbook covariance / standard-deviation formula in extended precision.
double pearson_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

ScalingCurve curve(std::vector<int> ns, std::vector<double> us) {
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < ns.size(); ++i) pts.push_back({ns[i], us[i], 1});
  return ScalingCurve("c", pts);
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("candidate validation") {
    CHECK_NOTHROW(validate_candidate({0.5, 0.4, 0.01, {}}));
    CHECK_THROWS_AS(validate_candidate({1.2, {}, {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_candidate({-0.1, {}, {}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_candidate({0.5, 0.5, -1e-9, {}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_candidate({std::nan(""), {}, {}, {}}), std::invalid_argument);
  }

  TEST_CASE("pools and datasets enforce their invariants") {
    CHECK_THROWS_AS(CandidatePool("u", "q", {}), std::invalid_argument);
    CandidatePool p("u", "q", {{0.1, {}, {}, {}}, {0.2, {}, {}, {}}});
    CHECK(p.size() == 2);
    CHECK_FALSE(p.has_predictions());
    const std::vector<double> means{0.3, 0.4};
    const auto scored = p.with_predictions(means, {});
    CHECK(scored.has_predictions());
    CHECK_FALSE(scored.has_variances());
    CHECK(*scored[1].pred_mean == 0.4);

    CHECK_THROWS_AS(UserDataset("v", {p}), std::invalid_argument);
    UserDataset ds("u", {p, p});
    CHECK(ds.candidate_count() == 4);
  }

  TEST_CASE("scaling curves require strictly increasing n and positive trials") {
    CHECK_THROWS_AS(ScalingCurve("x", {{5, 0.1, 1}, {5, 0.2, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(ScalingCurve("x", {{0, 0.1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(ScalingCurve("x", {{1, 0.1, 0}}), std::invalid_argument);
    const auto c = curve({1, 5, 10}, {0.1, 0.2, 0.3});
    CHECK(c.n_grid() == std::vector<int>{1, 5, 10});
  }

  TEST_CASE("pearson examples") {
    const std::vector<double> a{1, 2, 3}, b{3, 2, 1}, c{1, 2, 4};
    CHECK(pearson(a, a).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(a, b).value == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pearson(a, c).value == doctest::Approx(pearson_oracle(a, c)).epsilon(1e-14));
    CHECK(pearson_oracle(a, c) == doctest::Approx(3.0 / std::sqrt(28.0 / 3.0)).epsilon(1e-14));
  }

  TEST_CASE("pearson errors and degenerate marker") {
    const std::vector<double> one{1.0}, two{1.0, 2.0}, three{1.0, 2.0, 3.0}, flat{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(pearson(one, one), std::invalid_argument);
    CHECK_THROWS_AS(pearson(two, three), std::invalid_argument);
    const Correlation d = pearson(three, flat);
    CHECK(d.degenerate);
    CHECK(d.value == 0.0);
  }

  TEST_CASE("pearson is symmetric and invariant under positive affine maps") {
    RandomStream rng(11);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(20), y(20), x2(20);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        y[i] = 0.4 * x[i] + rng.normal();
      }
      const double scale = rng.uniform(0.1, 10.0), shift = rng.uniform(-5.0, 5.0);
      for (std::size_t i = 0; i < x.size(); ++i) x2[i] = scale * x[i] + shift;
      const double r = pearson(x, y).value;
      CHECK(pearson(y, x).value == doctest::Approx(r).epsilon(1e-12));
      CHECK(pearson(x2, y).value == doctest::Approx(r).epsilon(1e-10));
      CHECK(r == doctest::Approx(pearson_oracle(x, y)).epsilon(1e-12));
    }
  }

  TEST_CASE("spearman examples") {
    const std::vector<double> a{1, 2, 3}, b{1, 3, 2}, up{0.1, 5, 7}, flat{4, 4, 4};
    CHECK(spearman(a, up).value == doctest::Approx(1.0));
    CHECK(spearman(a, b).value == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(spearman(a, flat).degenerate);
  }

  TEST_CASE("average ranks share ties") {
    const std::vector<double> xs{10, 20, 20, 5};
    CHECK(average_ranks(xs) == std::vector<double>{2.0, 3.5, 3.5, 1.0});
  }

  TEST_CASE("spearman is invariant under strictly monotone transforms") {
    RandomStream rng(12);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(15), y(15), tx(15);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        y[i] = x[i] + rng.normal();
        tx[i] = std::exp(3.0 * x[i]) + x[i];
      }
      CHECK(spearman(tx, y).value == doctest::Approx(spearman(x, y).value).epsilon(1e-12));
    }
  }

  TEST_CASE("rel_mae examples") {
    CHECK(rel_mae(curve({1, 5}, {1.0, 1.0}), curve({1, 5}, {1.0, 2.0})) == doctest::Approx(0.25));
    CHECK(rel_mae(curve({1}, {0.9}), curve({1}, {1.0})) == doctest::Approx(0.1));
    const auto c = curve({1, 5}, {0.3, 0.4});
    CHECK(rel_mae(c, c) == 0.0);
    CHECK_THROWS_AS(rel_mae(curve({1, 5}, {1, 1}), curve({1, 5}, {0.0, 1})), std::domain_error);
    CHECK_THROWS_AS(rel_mae(curve({1, 5}, {1, 1}), curve({1, 6}, {1, 1})), std::invalid_argument);
  }

  TEST_CASE("r_squared examples") {
    const auto obs = curve({1, 5, 10}, {0.2, 0.5, 0.6});
    CHECK(r_squared(obs, obs) == 1.0);
    const double m = (0.2 + 0.5 + 0.6) / 3.0;
    CHECK(r_squared(curve({1, 5, 10}, {m, m, m}), obs) == doctest::Approx(0.0).epsilon(1e-12));
    // Hand computation: residuals (0.05, -0.1, 0.05); SS_tot from the mean above.
    const double ss_res = 0.05 * 0.05 + 0.1 * 0.1 + 0.05 * 0.05;
    const double ss_tot = (0.2 - m) * (0.2 - m) + (0.5 - m) * (0.5 - m) + (0.6 - m) * (0.6 - m);
    CHECK(r_squared(curve({1, 5, 10}, {0.25, 0.4, 0.65}), obs) == doctest::Approx(1.0 - ss_res / ss_tot));
    CHECK_THROWS_AS(r_squared(obs, curve({1, 5, 10}, {0.3, 0.3, 0.3})), std::domain_error);
  }

  TEST_CASE("rel_mae and r_squared detect any difference") {
    const auto a = curve({1, 5, 10}, {0.2, 0.5, 0.6});
    const auto b = curve({1, 5, 10}, {0.2, 0.5, 0.6000001});
    CHECK(rel_mae(b, a) > 0.0);
    CHECK(r_squared(b, a) < 1.0);
  }

  TEST_CASE("fit_line recovers an exact line") {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const LinearFit f = fit_line(x, y);
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.slope_stderr == doctest::Approx(0.0));
  }

  TEST_CASE("statistics are bit-reproducible") {
    RandomStream rng(3);
    std::vector<double> x(100), y(100);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    CHECK(pearson(x, y) == pearson(x, y));
    CHECK(spearman(x, y) == spearman(x, y));
    CHECK(mean(x) == mean(x));
  }
}
