#include "doctest.h"

#include <cmath>
#include <functional>
#include <limits>

#include "impactgame/equilibrium.hpp"
#include "impactgame/flow.hpp"
#include "impactgame/oracle.hpp"

using namespace impactgame;

namespace {

ValidatedScenario fig_scenario(double sigma = 0.5) {
  MarketParams m;
  m.theta_1 = 1.0;
  m.theta_2 = 1.0;
  m.vol = VolatilitySpec::constant(sigma);
  m.s = 0.0;
  m.T = 5.0;
  m.s0 = 10.0;
  m.w1_0 = 0.0;
  m.w2_0 = 0.0;
  m.pi1_0 = 0.6;
  m.pi2_0 = -1.0;
  return validate_market(m, Preferences{4.0, 1.0}, ControlBounds{-50.0, 50.0});
}

PiecewiseControl holding(const TimeGrid& g, double v) {
  return PiecewiseControl::constant(g, v, ControlKind::AuxHolding);
}

PiecewiseControl rate(const TimeGrid& g, double v) {
  return PiecewiseControl::constant(g, v, ControlKind::TradingRate);
}

PiecewiseControl sampled(const TimeGrid& g, ControlKind kind,
                         const std::function<double(double)>& f) {
  PiecewiseControl c;
  c.grid = g;
  c.kind = kind;
  c.values.resize(g.n_steps());
  for (std::size_t k = 0; k < g.n_steps(); ++k) c.values[k] = f(g.nodes[k]);
  return c;
}

}  // namespace

TEST_CASE("z score") {
  ValueEstimate a, b;
  a.mean = b.mean = -0.25;
  CHECK_EQ(z_score(a, b), 0.0);

  a.mean = -0.2;
  CHECK_EQ(z_score(a, b), std::numeric_limits<double>::infinity());
  CHECK_EQ(z_score(b, a), -std::numeric_limits<double>::infinity());

  a.std_error = 0.3;
  b.std_error = 0.4;
  a.mean = -0.25 + 0.5;
  CHECK_EQ(z_score(a, b), doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fnv1a digest") {
  CHECK_EQ(fnv1a_hex(""), "cbf29ce484222325");
  CHECK_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  CHECK_EQ(fnv1a_hex("payload"), fnv1a_hex("payload"));
  CHECK_NE(fnv1a_hex("payload"), fnv1a_hex("payloae"));
  CHECK_EQ(fnv1a_hex("x").size(), 16);
}

TEST_CASE("value estimates") {
  auto sc = fig_scenario();
  auto g = TimeGrid::uniform(0.0, 5.0, 50);
  auto noise = BrownianBundle::create(g, 2718, 400);

  SUBCASE("the do-nothing policy is priced exactly") {
    auto est = estimate_value(sc, 1, holding(g, 0.0), rate(g, 0.0), noise);
    CHECK_EQ(est.mean, cara_utility(0.0, 4.0));
    CHECK_EQ(est.std_error, 0.0);
    CHECK_EQ(est.n_paths, 400);
    CHECK_EQ(est.n_flagged, 0);
    CHECK_EQ(est.seed, 2718);

    auto est2 = estimate_value(sc, 2, holding(g, 0.0), rate(g, 0.0), noise);
    CHECK_EQ(est2.mean, cara_utility(0.0, 1.0));
    CHECK_EQ(est2.std_error, 0.0);
  }

  SUBCASE("repeat calls are bitwise identical") {
    auto pi = holding(g, 0.4);
    auto x = rate(g, 0.2);
    auto e1 = estimate_value(sc, 1, pi, x, noise);
    auto e2 = estimate_value(sc, 1, pi, x, noise);
    CHECK_EQ(e1.mean, e2.mean);
    CHECK_EQ(e1.std_error, e2.std_error);
    CHECK(e1.std_error > 0.0);
  }

  SUBCASE("control and grid validation") {
    CHECK_THROWS_AS(estimate_value(sc, 1, rate(g, 0.0), rate(g, 0.0), noise),
                    GridMismatch);
    CHECK_THROWS_AS(
        estimate_value(sc, 1, holding(g, 0.0), holding(g, 0.0), noise),
        GridMismatch);
    auto g2 = TimeGrid::uniform(0.0, 5.0, 49);
    CHECK_THROWS_AS(
        estimate_value(sc, 1, holding(g2, 0.0), rate(g, 0.0), noise),
        GridMismatch);
    CHECK_THROWS_AS(
        estimate_value(sc, 1, holding(g, 99.0), rate(g, 0.0), noise),
        BoundsViolation);
  }

  SUBCASE("standard error shrinks like the square root of the paths") {
    auto pi = holding(g, 0.5);
    auto x = rate(g, 0.2);
    auto small = BrownianBundle::create(g, 31, 400);
    auto large = BrownianBundle::create(g, 31, 6400);
    const double se_small = estimate_value(sc, 1, pi, x, small).std_error;
    const double se_large = estimate_value(sc, 1, pi, x, large).std_error;
    CHECK_EQ(se_small / se_large, doctest::Approx(4.0).epsilon(0.3));
  }
}

TEST_CASE("monte carlo agrees with the gaussian closed form") {
  auto sc = fig_scenario();
  auto g = TimeGrid::uniform(0.0, 5.0, 100);

  SUBCASE("within three standard errors under noise") {
    auto noise = BrownianBundle::create(g, 424242, 3000);
    auto pi = holding(g, 0.5);
    auto x = rate(g, 0.2);
    auto est = estimate_value(sc, 1, pi, x, noise);
    const double truth = cara_gaussian_value(sc, 1, pi, x);
    REQUIRE(est.std_error > 0.0);
    CHECK(std::fabs(est.mean - truth) < 3.0 * est.std_error);
  }

  SUBCASE("exactly in the deterministic degenerate case") {
    auto flat = fig_scenario(0.0);
    auto noise = BrownianBundle::create(g, 7, 16);
    auto pi = holding(g, 0.5);
    auto x = rate(g, 0.2);
    auto est = estimate_value(flat, 1, pi, x, noise);
    CHECK_EQ(est.std_error, 0.0);
    CHECK_EQ(est.mean,
             doctest::Approx(cara_gaussian_value(flat, 1, pi, x)).epsilon(1e-12));
  }

  SUBCASE("rejects what it cannot price") {
    auto pi = holding(g, 0.5);
    auto x = rate(g, 0.2);
    auto other = rate(TimeGrid::uniform(0.0, 5.0, 99), 0.2);
    CHECK_THROWS_AS(cara_gaussian_value(sc, 1, pi, other), GridMismatch);

    MarketParams m = sc.market;
    m.vol = VolatilitySpec::bounded_lipschitz([](double) { return 0.5; }, 0.6,
                                              0.1);
    auto varying = validate_market(m, sc.prefs, sc.bounds);
    CHECK_THROWS_AS(cara_gaussian_value(varying, 1, pi, x),
                    NonConstantVolatility);
  }
}

TEST_CASE("brute force search") {
  auto sc = fig_scenario();

  SUBCASE("zero opponent: doing nothing is optimal, found exhaustively") {
    for (int investor = 1; investor <= 2; ++investor) {
      auto coarse = TimeGrid::uniform(0.0, 5.0, 3);
      auto noise = BrownianBundle::create(coarse, 99, 800);
      auto res = brute_force_best(sc, investor, rate(coarse, 0.0),
                                  {-0.5, 0.0, 0.5}, 3, noise);
      CHECK(res.exhaustive);
      CHECK_EQ(res.evaluations, 27);
      for (double v : res.best.values) CHECK_EQ(v, 0.0);
      CHECK_EQ(res.value.mean, cara_utility(0.0, sc.delta(investor)));
      CHECK_EQ(res.value.std_error, 0.0);
    }
  }

  SUBCASE("refining the intervals cannot hurt the best value") {
    auto master_grid = TimeGrid::uniform(0.0, 5.0, 8);
    auto master = BrownianBundle::create(master_grid, 5150, 400);
    const std::vector<double> levels{-0.5, 0.0, 0.5};

    auto coarse2 = TimeGrid::uniform(0.0, 5.0, 2);
    auto coarse4 = TimeGrid::uniform(0.0, 5.0, 4);
    auto r2 = brute_force_best(sc, 1, rate(coarse2, 0.3), levels, 2, master);
    auto r4 = brute_force_best(sc, 1, rate(coarse4, 0.3), levels, 4, master);
    CHECK(r2.exhaustive);
    CHECK(r4.exhaustive);
    CHECK_EQ(r2.evaluations, 9);
    CHECK_EQ(r4.evaluations, 81);
    CHECK(r4.value.mean >= r2.value.mean - 1e-9);
  }

  SUBCASE("oversized spaces fall back to seeded restarts") {
    auto coarse = TimeGrid::uniform(0.0, 5.0, 6);
    auto noise = BrownianBundle::create(coarse, 12, 200);
    const std::vector<double> levels{-0.6, -0.2, 0.2, 0.6};

    SearchBudget none;
    none.random_restarts = 0;
    CHECK_THROWS_AS(brute_force_best(sc, 1, rate(coarse, 0.3), levels, 6,
                                     noise, none),
                    BudgetExceeded);

    SearchBudget few;
    few.random_restarts = 3;
    auto res = brute_force_best(sc, 1, rate(coarse, 0.3), levels, 6, noise, few);
    CHECK_FALSE(res.exhaustive);
    CHECK(res.evaluations > 0);
    for (double v : res.best.values) {
      bool known = false;
      for (double l : levels) known |= (v == l);
      CHECK(known);
    }

    auto res2 = brute_force_best(sc, 1, rate(coarse, 0.3), levels, 6, noise, few);
    for (std::size_t k = 0; k < res.best.values.size(); ++k) {
      CHECK_EQ(res.best.values[k], res2.best.values[k]);
    }
  }

  SUBCASE("input validation") {
    auto coarse = TimeGrid::uniform(0.0, 5.0, 3);
    auto noise = BrownianBundle::create(coarse, 1, 10);
    CHECK_THROWS_AS(
        brute_force_best(sc, 1, rate(coarse, 0.0), {}, 3, noise),
        BudgetExceeded);
    CHECK_THROWS_AS(
        brute_force_best(sc, 1, rate(coarse, 0.0), {99.0}, 3, noise),
        BoundsViolation);
    auto fine = TimeGrid::uniform(0.0, 5.0, 50);
    CHECK_THROWS_AS(
        brute_force_best(sc, 1, rate(fine, 0.0), {0.0}, 3,
                         BrownianBundle::create(fine, 1, 10)),
        GridMismatch);
  }
}

TEST_CASE("random level controls") {
  auto g = TimeGrid::uniform(0.0, 5.0, 6);
  const std::vector<double> levels{-1.0, 0.0, 1.0};
  auto cs = random_level_controls(levels, g, 25, 777);
  CHECK_EQ(cs.size(), 25);
  for (const auto& c : cs) {
    CHECK(c.grid.same_as(g));
    CHECK(c.kind == ControlKind::AuxHolding);
    REQUIRE_EQ(c.values.size(), 6);
    for (double v : c.values) {
      CHECK((v == -1.0 || v == 0.0 || v == 1.0));
    }
  }
  auto cs2 = random_level_controls(levels, g, 25, 777);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK_EQ(cs[i].values[k], cs2[i].values[k]);
    }
  }
  CHECK_THROWS_AS(random_level_controls({}, g, 3, 1), BudgetExceeded);
}

TEST_CASE("dominance of the equilibrium against random challengers") {
  auto sc = fig_scenario();
  auto sol = nash_equilibrium(sc);

  auto fine = TimeGrid::uniform(0.0, 5.0, 200);
  auto coarse = TimeGrid::uniform(0.0, 5.0, 4);
  auto noise = BrownianBundle::create(fine, 160320, 1500);

  auto candidate = sampled(fine, ControlKind::AuxHolding,
                           [&](double t) { return sol.pi1(t); });
  auto x_opp_fine = sampled(fine, ControlKind::TradingRate,
                            [&](double t) { return sol.x2(t); });
  auto x_opp_coarse = sampled(coarse, ControlKind::TradingRate,
                              [&](double t) { return sol.x2(t); });
  auto challengers =
      random_level_controls({-2.0, -1.0, 0.0, 1.0, 2.0}, coarse, 40, 8899);

  auto rep = dominance_check(sc, 1, candidate, x_opp_fine, challengers,
                             x_opp_coarse, noise);
  CHECK_EQ(rep.challengers.size(), 40);
  CHECK_EQ(rep.challengers[0].first, "challenger-0000");
  CHECK_EQ(rep.challengers[39].first, "challenger-0039");
  CHECK(rep.margin > -3.0);
  CHECK(rep.verdict);
  CHECK(rep.candidate.n_paths == 1500);
}

TEST_CASE("value is invariant along the flow orbit") {
  auto sc = fig_scenario();
  auto g = TimeGrid::uniform(0.0, 5.0, 100);
  auto noise = BrownianBundle::create(g, 1609, 1000);
  auto x_opp = rate(g, 0.2);
  GameState y{10.0, 0.6, -1.0, 0.0, 0.0};

  SUBCASE("the zero jump is literally the identity") {
    auto r = invariance_check(sc, 1, y, 0.0, x_opp, noise);
    CHECK_EQ(r.z, 0.0);
    CHECK_EQ(r.at_state.mean, r.at_flow.mean);
  }

  SUBCASE("nonzero jumps agree to rounding noise") {
    for (double q : {0.5, -1.0}) {
      auto r = invariance_check(sc, 1, y, q, x_opp, noise);
      CHECK(std::fabs(r.z) < 3.0);
      CHECK(std::fabs(r.z) < 1e-6);
      CHECK(std::fabs(r.at_state.mean - r.at_flow.mean) < 1e-12);
    }
  }

  SUBCASE("the opponent schedule must live on the noise grid") {
    auto bad = rate(TimeGrid::uniform(0.0, 5.0, 99), 0.2);
    CHECK_THROWS_AS(invariance_check(sc, 1, y, 0.5, bad, noise), GridMismatch);
  }
}

TEST_CASE("game and auxiliary representations price candidates alike") {
  auto g = TimeGrid::uniform(0.0, 5.0, 100);

  SUBCASE("under noise, with common random numbers") {
    auto sc = fig_scenario();
    auto noise = BrownianBundle::create(g, 9001, 2000);
    auto r = equivalence_check(sc, 1, holding(g, 0.3), rate(g, 0.2), noise);
    CHECK_EQ(r.game_side.n_paths, 2000);
    CHECK_EQ(r.aux_side.n_paths, 2000);
    CHECK(std::fabs(r.z) < 3.0);
  }

  SUBCASE("deterministic case agrees to rounding") {
    auto flat = fig_scenario(0.0);
    auto noise = BrownianBundle::create(g, 4, 8);
    auto r = equivalence_check(flat, 1, holding(g, 0.3), rate(g, 0.2), noise);
    // both sides collapse to a single deterministic wealth; compare the
    // means directly since the studentized gap is 0/0 here
    CHECK_EQ(r.game_side.std_error, 0.0);
    CHECK_EQ(r.aux_side.std_error, 0.0);
    CHECK_EQ(r.game_side.mean,
             doctest::Approx(r.aux_side.mean).epsilon(1e-12));
  }

  SUBCASE("a candidate equal to the initial holding takes no jump") {
    auto sc = fig_scenario();
    auto noise = BrownianBundle::create(g, 5, 200);
    auto r = equivalence_check(sc, 1, holding(g, 0.6), rate(g, 0.2), noise);
    CHECK(std::fabs(r.z) < 3.0);
  }
}

TEST_CASE("expected utility is concave along control segments") {
  auto sc = fig_scenario();
  auto g = TimeGrid::uniform(0.0, 5.0, 50);
  auto noise = BrownianBundle::create(g, 31337, 500);
  auto x_opp = rate(g, 0.2);

  SUBCASE("distinct constant controls give strictly positive slack") {
    auto rep = concavity_check(sc, 1, holding(g, 0.5), holding(g, -0.5), 0.5,
                               x_opp, noise);
    CHECK(rep.pass);
    CHECK(rep.strict_applicable);
    CHECK_FALSE(rep.degenerate);
    CHECK(rep.slack > 0.0);
  }

  SUBCASE("several mixing weights") {
    for (double xi : {0.25, 0.5, 0.75}) {
      auto rep = concavity_check(sc, 1, holding(g, 0.8), holding(g, -0.2), xi,
                                 x_opp, noise);
      CHECK(rep.pass);
      CHECK(rep.slack > 0.0);
    }
  }

  SUBCASE("identical controls are degenerate and pass vacuously") {
    auto rep = concavity_check(sc, 1, holding(g, 0.4), holding(g, 0.4), 0.5,
                               x_opp, noise);
    CHECK(rep.degenerate);
    CHECK_FALSE(rep.strict_applicable);
    CHECK(rep.pass);
    CHECK_EQ(rep.slack, 0.0);
  }

  SUBCASE("a difference on one interval in fifty is not strict material") {
    auto a = holding(g, 0.4);
    auto b = holding(g, 0.4);
    b.values[10] = -0.4;
    auto rep = concavity_check(sc, 1, a, b, 0.5, x_opp, noise);
    CHECK_FALSE(rep.degenerate);
    CHECK_FALSE(rep.strict_applicable);
    CHECK(rep.pass);
  }

  SUBCASE("mixing weight domain") {
    CHECK_THROWS_AS(concavity_check(sc, 1, holding(g, 0.5), holding(g, -0.5),
                                    0.0, x_opp, noise),
                    std::invalid_argument);
    CHECK_THROWS_AS(concavity_check(sc, 1, holding(g, 0.5), holding(g, -0.5),
                                    1.0, x_opp, noise),
                    std::invalid_argument);
    auto other = holding(TimeGrid::uniform(0.0, 5.0, 49), 0.5);
    CHECK_THROWS_AS(concavity_check(sc, 1, holding(g, 0.5), other, 0.5, x_opp,
                                    noise),
                    GridMismatch);
  }
}
