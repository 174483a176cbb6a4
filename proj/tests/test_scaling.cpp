#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bonlab/scaling.hpp"
#include "bonlab/selection.hpp"
#include "bonlab/stats.hpp"
#include "bonlab/synth.hpp"

using namespace bonlab;

namespace {

const std::vector<int> kGrid{1, 5, 10, 15, 20, 30};

double slope_of(const ScalingCurve& c) { return calibrate_scale(c).scale; }

ScalingLawParams lamp4_det() {
  ScalingLawParams p;
  p.mu_bar = 0.3;
  p.scale = 0.1;
  p.alpha = 0.20;
  p.beta = 0.33;
  p.rho_plus = 0.273;
  p.rho_minus = -0.202;
  return p;
}

}  // namespace

TEST_SUITE("scaling") {
  TEST_CASE("predict_oracle examples") {
    const auto c = predict_oracle(0.3, 0.1, kGrid);
    CHECK(c.points()[0].utility == 0.3);
    CHECK(c.points()[1].utility == doctest::Approx(0.3 + 0.1 * std::sqrt(std::log(5.0))).epsilon(1e-15));
    const auto flat = predict_oracle(0.4, 0.0, kGrid);
    for (double u : flat.utilities()) CHECK(u == 0.4);
    CHECK_THROWS_AS(predict_oracle(0.3, -0.1, kGrid), std::invalid_argument);
    CHECK_THROWS_AS(predict_oracle(0.3, 0.1, std::vector<int>{5, 1}), std::invalid_argument);
    CHECK(theoretical_scale(0.1) == doctest::Approx(0.1 * std::sqrt(2.0)));
  }

  TEST_CASE("effective correlation examples from the per-task table") {
    CHECK(std::abs(effective_correlation(0.20, 0.33, 0.273, -0.202) - 0.093) <= 0.005);
    CHECK(std::abs(effective_correlation(0.00, 0.08, 0.523, -0.168) - 0.467) <= 0.005);
    CHECK(effective_correlation(1.0, 0.4, 0.9, -0.3) == 0.0);
    CHECK(effective_correlation_inner(0.33, 0.273, -0.202) ==
          doctest::Approx(0.67 * 0.273 - 0.33 * 0.202).epsilon(1e-15));
  }

  TEST_CASE("Abstract Prob row recomputes to 0.74855, not the tabulated 0.754") {
    // 0.99 * 0.758 - 0.01 * 0.187; the tabulated value does not follow from its own inputs.
    const double r = effective_correlation(0.0, 0.01, 0.758, -0.187);
    CHECK(r == doctest::Approx(0.74855).epsilon(1e-12));
    CHECK(std::abs(r - 0.754) > 0.005);
  }

  TEST_CASE("unified law reduces to the oracle law") {
    ScalingLawParams p;
    p.mu_bar = 0.25;
    p.scale = 0.12;
    p.rho_plus = 1.0;
    CHECK(predict_unified(p, kGrid).utilities() == predict_oracle(0.25, 0.12, kGrid).utilities());

    p.rho_plus = 0.0;
    for (double u : predict_unified(p, kGrid).utilities()) CHECK(u == 0.25);
  }

  TEST_CASE("unified slope is rho_eff times the scale") {
    ScalingLawParams p;
    p.mu_bar = 0.2;
    p.scale = 0.1;
    p.beta = 0.01;
    p.rho_plus = 0.758;
    p.rho_minus = -0.187;
    const auto c = predict_unified(p, kGrid);
    CHECK(slope_of(c) == doctest::Approx(effective_correlation(0, 0.01, 0.758, -0.187) * 0.1).epsilon(1e-9));
  }

  TEST_CASE("refined law examples") {
    ScalingLawParams p = lamp4_det();
    CHECK(predict_refined(p, kGrid).utilities() == predict_unified(p, kGrid).utilities());
    p.rho_collapsed = -0.027;
    CHECK(slope_of(predict_refined(p, kGrid)) < slope_of(predict_unified(p, kGrid)));
    const double expected = 0.8 * effective_correlation_inner(0.33, 0.273, -0.202) + 0.2 * -0.027;
    CHECK(slope_of(predict_refined(p, kGrid)) == doctest::Approx(expected * 0.1).epsilon(1e-9));

    p.alpha = 0.0;
    CHECK(predict_refined(p, kGrid).utilities() == predict_unified(p, kGrid).utilities());
  }

  TEST_CASE("parameters are validated") {
    ScalingLawParams p = lamp4_det();
    p.alpha = 1.2;
    CHECK_THROWS_AS(predict_unified(p, kGrid), std::invalid_argument);
    p = lamp4_det();
    p.rho_minus = 0.1;
    CHECK_THROWS_AS(validate_scaling_params(p), std::invalid_argument);
  }

  TEST_CASE("calibrate_scale recovers an exact curve") {
    const auto c = predict_oracle(0.2, 0.15, std::vector<int>{1, 5, 10, 20, 30});
    const auto f = calibrate_scale(c);
    CHECK(std::abs(f.mu_bar - 0.2) <= 1e-9);
    CHECK(std::abs(f.scale - 0.15) <= 1e-9);
    CHECK(f.r_squared == doctest::Approx(1.0));

    const ScalingCurve two("t", {{2, 0.31, 1}, {9, 0.47, 1}});
    const auto g = calibrate_scale(two);
    const auto back = predict_oracle(g.mu_bar, g.scale, std::vector<int>{2, 9}).utilities();
    CHECK(back[0] == doctest::Approx(0.31).epsilon(1e-12));
    CHECK(back[1] == doctest::Approx(0.47).epsilon(1e-12));

    CHECK_THROWS_AS(calibrate_scale(ScalingCurve("o", {{5, 0.3, 1}})), std::invalid_argument);
  }

  TEST_CASE("Monte Carlo oracle slope lies between 0.7 sigma and sqrt(2) sigma") {
    PopulationSpec s;
    s.n_users = 40;
    s.queries_per_user = 20;
    s.candidates_per_query = 30;
    s.seed = 3;
    const auto pop = generate_population(s).users;
    const auto f = calibrate_scale(estimate_utility_curve(pop, Strategy::oracle(), {kGrid, 3, 5}));
    CHECK(f.scale >= 0.7 * 0.1);
    CHECK(f.scale <= std::sqrt(2.0) * 0.1);
  }

  TEST_CASE("score_prediction examples") {
    const auto obs = predict_oracle(0.3, 0.1, kGrid);
    const auto s = score_prediction(obs, obs);
    CHECK(s.rel_mae == 0.0);
    CHECK(s.r_squared == 1.0);
    CHECK_THROWS_AS(score_prediction(obs, predict_oracle(0.3, 0.0, kGrid)), std::domain_error);
    CHECK_THROWS_AS(score_prediction(obs, predict_oracle(0.3, 0.1, std::vector<int>{1, 5})),
                    std::invalid_argument);
  }
}
