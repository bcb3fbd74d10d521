// Acceptance gate: ten end-to-end criteria, one PASS/FAIL line each.
// Exits nonzero if any criterion fails. All seeds are fixed constants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "impactgame/arbitrage.hpp"
#include "impactgame/bestresponse.hpp"
#include "impactgame/dynamics.hpp"
#include "impactgame/equilibrium.hpp"
#include "impactgame/flow.hpp"
#include "impactgame/model.hpp"
#include "impactgame/oracle.hpp"

using namespace impactgame;

namespace {

std::string g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

ValidatedScenario figure_scenario(double sigma = 0.5) {
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

PiecewiseControl constant_control(const TimeGrid& grid, double v,
                                  ControlKind kind) {
  return PiecewiseControl::constant(grid, v, kind);
}

double uniform_in(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
}

double state_distance(const GameState& a, const GameState& b) {
  double d = std::abs(a.S - b.S);
  d = std::max(d, std::abs(a.pi_1 - b.pi_1));
  d = std::max(d, std::abs(a.pi_2 - b.pi_2));
  d = std::max(d, std::abs(a.W_1 - b.W_1));
  d = std::max(d, std::abs(a.W_2 - b.W_2));
  return d;
}

// --------------------------------------------------------------------------

bool criterion_1(std::string& detail) {
  const EquilibriumSolution sol = nash_equilibrium(figure_scenario());
  bool ok = std::abs(sol.constants().chi - 0.5) < 1e-12 &&
            std::abs(sol.constants().varphi - 2.0) < 1e-12;

  double worst = 0.0;
  for (double t : {0.0, 1.0, 2.5, 5.0}) {
    const double p1 = 0.6 * std::cosh(0.5 * t) - 0.5 * std::sinh(0.5 * t);
    const double p2 = 1.2 * std::sinh(0.5 * t) - std::cosh(0.5 * t);
    worst = std::max(worst, std::abs(sol.pi1(t) - p1));
    worst = std::max(worst, std::abs(sol.pi2(t) - p2));
  }
  ok = ok && worst < 1e-9;

  const auto t1 = crossing_time(sol, 1);
  const auto t2 = crossing_time(sol, 2);
  const double root = 2.0 * std::atanh(5.0 / 6.0);
  double cross_err = 1e300;
  if (!t1 && t2) cross_err = std::abs(*t2 - root);
  ok = ok && cross_err < 1e-6 && t2 && std::abs(*t2 - 2.376) < 0.05;

  detail = "traj sup " + g(worst) + ", crossing err " + g(cross_err) +
           ", marker gap " + (t2 ? g(std::abs(*t2 - 2.376)) : "n/a");
  return ok;
}

bool criterion_2(std::string& detail) {
  const ValidatedScenario scn = figure_scenario();
  const EquilibriumSolution sol = nash_equilibrium(scn);
  const double chi = sol.constants().chi;
  const double phi = sol.constants().varphi;
  const double a1 = scn.market.pi1_0, b1 = scn.market.pi2_0 / phi;
  const double a2 = scn.market.pi2_0, b2 = phi * scn.market.pi1_0;

  std::mt19937_64 eng(20240802);
  const double h = 1e-4;
  double worst_analytic = 0.0, worst_fd = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = uniform_in(eng, 2 * h, 5.0 - 2 * h);
    // the trajectories satisfy dpi1/dt = (chi/phi) pi2, dpi2/dt = chi phi pi1
    const double d1 = chi * (a1 * std::sinh(chi * t) + b1 * std::cosh(chi * t));
    const double d2 = chi * (a2 * std::sinh(chi * t) + b2 * std::cosh(chi * t));
    worst_analytic = std::max(worst_analytic,
                              std::abs(d1 - (chi / phi) * sol.pi2(t)));
    worst_analytic = std::max(worst_analytic,
                              std::abs(d2 - chi * phi * sol.pi1(t)));

    const double f1 = (sol.pi1(t + h) - sol.pi1(t - h)) / (2 * h);
    const double f2 = (sol.pi2(t + h) - sol.pi2(t - h)) / (2 * h);
    worst_fd = std::max(worst_fd, std::abs(f1 - (chi / phi) * sol.pi2(t)));
    worst_fd = std::max(worst_fd, std::abs(f2 - chi * phi * sol.pi1(t)));
  }

  detail = "analytic residual " + g(worst_analytic) + ", fd residual " +
           g(worst_fd);
  return worst_analytic < 1e-12 && worst_fd < 1e-6;
}

bool criterion_3(std::string& detail) {
  const MarketParams mkt = figure_scenario().market;
  std::mt19937_64 eng(20240803);
  std::vector<GameState> states;
  for (int i = 0; i < 10; ++i) {
    states.push_back(GameState{uniform_in(eng, 1.0, 20.0),
                               uniform_in(eng, -2.0, 2.0),
                               uniform_in(eng, -2.0, 2.0),
                               uniform_in(eng, -5.0, 5.0),
                               uniform_in(eng, -5.0, 5.0)});
  }

  double sup_ode = 0.0;
  for (const GameState& y : states) {
    for (int j = 0; j <= 20; ++j) {
      const double q = -5.0 + 0.5 * j;
      for (int inv = 1; inv <= 2; ++inv) {
        sup_ode = std::max(sup_ode,
                           state_distance(flow_full(q, y, inv, mkt),
                                          flow_ode_oracle(q, y, inv, mkt, 200)));
      }
    }
  }

  double sup_group = 0.0;
  for (const GameState& y : states) {
    for (double q1 : {-2.0, 0.7}) {
      for (double q2 : {-1.3, 0.4}) {
        for (int inv = 1; inv <= 2; ++inv) {
          const GameState a =
              flow_full(q2, flow_full(q1, y, inv, mkt), inv, mkt);
          const GameState b = flow_full(q1 + q2, y, inv, mkt);
          sup_group = std::max(sup_group, state_distance(a, b));
        }
      }
    }
  }

  double sup_jac = 0.0;
  const double h = 1e-5;
  for (const GameState& y : states) {
    for (double q : {-1.5, 0.8}) {
      for (int inv = 1; inv <= 2; ++inv) {
        const Matrix5 jac = flow_jacobian(q, inv, mkt);
        for (int j = 0; j < 5; ++j) {
          GameState yp = y, ym = y;
          double* cp[5] = {&yp.S, &yp.pi_1, &yp.pi_2, &yp.W_1, &yp.W_2};
          double* cm[5] = {&ym.S, &ym.pi_1, &ym.pi_2, &ym.W_1, &ym.W_2};
          *cp[j] += h;
          *cm[j] -= h;
          const GameState fp = flow_full(q, yp, inv, mkt);
          const GameState fm = flow_full(q, ym, inv, mkt);
          const double col[5] = {
              (fp.S - fm.S) / (2 * h), (fp.pi_1 - fm.pi_1) / (2 * h),
              (fp.pi_2 - fm.pi_2) / (2 * h), (fp.W_1 - fm.W_1) / (2 * h),
              (fp.W_2 - fm.W_2) / (2 * h)};
          for (int i = 0; i < 5; ++i) {
            sup_jac = std::max(sup_jac, std::abs(col[i] - jac[i][j]));
          }
        }
      }
    }
  }

  detail = "ode sup " + g(sup_ode) + ", group sup " + g(sup_group) +
           ", jacobian sup " + g(sup_jac);
  return sup_ode < 1e-8 && sup_group < 1e-13 && sup_jac < 1e-7;
}

bool criterion_4(std::string& detail) {
  MarketParams m;
  m.theta_1 = 1.0;
  m.theta_2 = 1.0;
  m.vol = VolatilitySpec::constant(0.2);
  m.s = 0.0;
  m.T = 1.0;
  m.s0 = 10.0;
  const ValidatedScenario scn =
      validate_market(m, Preferences{1.0, 1.0}, ControlBounds{-50.0, 50.0});
  const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 250);
  const PiecewiseControl zero =
      constant_control(grid, 0.0, ControlKind::TradingRate);
  const BrownianBundle noise = BrownianBundle::create(grid, 20240804, 100000);

  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  const SimDiagnostics diag = for_each_game_path(
      scn, zero, zero, noise, [&](std::size_t, const StatePath& path) {
        const double x = path.states.back().S;
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
      });
  const double se =
      std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  const double gap = std::abs(mean - 10.0);

  detail = "mean " + g(mean) + ", se " + g(se) + ", |mean-S0| " + g(gap) +
           ", flagged " + std::to_string(diag.flagged_paths);
  return gap < 4.0 * se && diag.flagged_paths == 0 && n == 100000;
}

bool criterion_5(std::string& detail) {
  // deterministic scenario tuned so every rounding in the wealth update is
  // sign-symmetric: the residual must be exactly zero
  MarketParams m;
  m.theta_1 = 1.7;
  m.theta_2 = 1.0;
  m.vol = VolatilitySpec::constant(0.0);
  m.s = 0.0;
  m.T = 5.0;
  m.s0 = 10.0;
  m.w2_0 = 3.0;
  m.pi1_0 = 0.6;
  m.pi2_0 = -1.0;
  const ValidatedScenario quiet =
      validate_market(m, Preferences{4.0, 1.0}, ControlBounds{-50.0, 50.0});
  const TimeGrid grid = TimeGrid::uniform(0.0, 5.0, 250);
  const BrownianBundle noise = BrownianBundle::create(grid, 20240805, 1);
  const StatePath path = simulate_game_path(
      quiet, constant_control(grid, 0.0, ControlKind::TradingRate),
      constant_control(grid, 1.0, ControlKind::TradingRate), noise, 0);
  const double exact = wealth_identity_residual(path, 1, quiet);

  // stochastic scenario: the residual is first order in the step, so
  // halving the step should halve it
  MarketParams ms = m;
  ms.theta_1 = 1.3;
  ms.theta_2 = 0.7;
  ms.vol = VolatilitySpec::constant(0.5);
  const ValidatedScenario noisy =
      validate_market(ms, Preferences{4.0, 1.0}, ControlBounds{-50.0, 50.0});
  auto residual_at = [&](std::size_t n_steps) {
    const TimeGrid gr = TimeGrid::uniform(0.0, 5.0, n_steps);
    PiecewiseControl x1;
    x1.grid = gr;
    x1.kind = ControlKind::TradingRate;
    for (std::size_t k = 0; k < gr.n_steps(); ++k) {
      x1.values.push_back(std::sin(1.3 * gr.nodes[k]) + 0.4);
    }
    const PiecewiseControl x2 =
        constant_control(gr, -0.25, ControlKind::TradingRate);
    const BrownianBundle nb = BrownianBundle::create(gr, 20240805, 1);
    return wealth_identity_residual(simulate_game_path(noisy, x1, x2, nb, 0),
                                    1, noisy);
  };
  const double coarse = residual_at(250);
  const double fine = residual_at(500);
  const double ratio = coarse / fine;

  detail = "deterministic residual " + g(exact) + " (exact zero: " +
           (exact == 0.0 ? "yes" : "no") + "), halving ratio " + g(ratio);
  return exact == 0.0 && ratio > 1.6 && ratio < 2.4;
}

bool criterion_6(std::string& detail) {
  const ValidatedScenario scn = figure_scenario();
  const EquilibriumSolution sol = nash_equilibrium(scn);
  const std::size_t n_fine = 1200, n_coarse = 6, n_paths = 20000;
  const TimeGrid fine = TimeGrid::uniform(0.0, 5.0, n_fine);
  const TimeGrid coarse = TimeGrid::uniform(0.0, 5.0, n_coarse);
  const std::vector<double> levels{-2.0, -1.5, -1.0, -0.5, 0.0,
                                   0.5,  1.0,  1.5,  2.0};

  detail.clear();
  bool ok = true;
  for (int inv = 1; inv <= 2; ++inv) {
    const int opp = 3 - inv;
    PiecewiseControl candidate, x_opp_fine;
    candidate.grid = x_opp_fine.grid = fine;
    candidate.kind = ControlKind::AuxHolding;
    x_opp_fine.kind = ControlKind::TradingRate;
    for (std::size_t k = 0; k < n_fine; ++k) {
      candidate.values.push_back(sol.pi(inv, fine.nodes[k]));
      x_opp_fine.values.push_back(sol.x(opp, fine.nodes[k]));
    }

    // challengers face the per-interval average of the same schedule, so a
    // piecewise-constant policy sees the identical drift and noise on both
    // grids and the sampled equilibrium is the exact discrete optimum
    PiecewiseControl x_opp_coarse;
    x_opp_coarse.grid = coarse;
    x_opp_coarse.kind = ControlKind::TradingRate;
    const std::size_t block = n_fine / n_coarse;
    for (std::size_t kc = 0; kc < n_coarse; ++kc) {
      double sum = 0.0;
      for (std::size_t k = kc * block; k < (kc + 1) * block; ++k) {
        sum += x_opp_fine.values[k];
      }
      x_opp_coarse.values.push_back(sum / static_cast<double>(block));
    }

    const auto challengers =
        random_level_controls(levels, coarse, 2000, 20240806 + inv);
    const BrownianBundle noise =
        BrownianBundle::create(fine, 77000 + inv, n_paths);
    const DominanceReport rep = dominance_check(
        scn, inv, candidate, x_opp_fine, challengers, x_opp_coarse, noise);
    ok = ok && rep.verdict && rep.margin > -3.0;
    if (inv > 1) detail += ", ";
    detail += "investor " + std::to_string(inv) + " margin " + g(rep.margin);
  }
  detail += " (2000 challengers, 20000 paths each)";
  return ok;
}

bool criterion_7(std::string& detail) {
  const ValidatedScenario scn = figure_scenario();
  const TimeGrid grid = TimeGrid::uniform(0.0, 5.0, 100);
  const BrownianBundle noise = BrownianBundle::create(grid, 20240807, 2000);
  const PiecewiseControl x_opp =
      constant_control(grid, 0.2, ControlKind::TradingRate);
  const GameState y0{10.0, 0.6, -1.0, 0.0, 0.0};

  bool ok = true;
  double worst_inv = 0.0;
  for (double q : {0.5, -1.0}) {
    const InvarianceResult r = invariance_check(scn, 1, y0, q, x_opp, noise);
    worst_inv = std::max(worst_inv, std::abs(r.z));
  }
  ok = ok && worst_inv < 3.0;

  double worst_eq = 0.0;
  for (int inv = 1; inv <= 2; ++inv) {
    const EquivalenceResult r = equivalence_check(
        scn, inv, constant_control(grid, 0.3, ControlKind::AuxHolding), x_opp,
        noise);
    worst_eq = std::max(worst_eq, std::abs(r.z));
  }
  ok = ok && worst_eq < 3.0;

  detail = "flow translation worst |z| " + g(worst_inv) +
           ", representation worst |z| " + g(worst_eq);
  return ok;
}

bool criterion_8(std::string& detail) {
  const std::vector<double> rates{0.5, 1.0, 2.0};
  const double T = 3.0;

  const ImpactFunction lin = ImpactFunction::linear(1.7);
  double worst_lin = 0.0;
  for (double a : rates) {
    for (TripKind kind : {TripKind::SymmetricBlock, TripKind::ThreePhase}) {
      const RoundTrip trip = make_roundtrip(kind, a, 1.0, T);
      worst_lin = std::max(worst_lin, std::abs(expected_gain(lin, trip)));
      worst_lin =
          std::max(worst_lin, std::abs(expected_gain(lin, mirrored(trip))));
    }
    for (double b : rates) {
      for (TripKind kind : {TripKind::SellFast, TripKind::BuyFast}) {
        const RoundTrip trip = make_roundtrip(kind, a, b, T);
        worst_lin = std::max(worst_lin, std::abs(expected_gain(lin, trip)));
        worst_lin =
            std::max(worst_lin, std::abs(expected_gain(lin, mirrored(trip))));
      }
    }
  }

  const ImpactFunction quad =
      ImpactFunction::custom([](double x) { return -x * std::abs(x); });
  const ArbitrageVerdict quad_verdict =
      detect_dynamic_arbitrage(quad, rates, rates, T);
  const bool quad_ok = quad_verdict.found && quad_verdict.witness &&
                       quad_verdict.witness->kind == TripKind::BuyFast &&
                       quad_verdict.witness->alpha == 1.0 &&
                       quad_verdict.witness->beta == 2.0 &&
                       std::abs(quad_verdict.gain - 2.0) <= 1e-10;

  const double c = 0.3;
  const ImpactFunction jump =
      ImpactFunction::custom([c](double x) { return x == 0.0 ? c : -x; });
  const ArbitrageVerdict jump_verdict =
      detect_dynamic_arbitrage(jump, rates, rates, T);
  const double probe_expect = T * T / 9.0 * c * c;
  const bool jump_ok = jump_verdict.found &&
                       std::abs(jump_verdict.gain - probe_expect) <= 1e-12;

  detail = "linear worst gain " + g(worst_lin) + ", quad witness gain " +
           g(quad_verdict.gain) + ", probe gain " + g(jump_verdict.gain);
  return worst_lin < 1e-13 && quad_ok && jump_ok;
}

bool criterion_9(std::string& detail) {
  const ValidatedScenario scn = figure_scenario();
  const TimeGrid grid = TimeGrid::uniform(0.0, 5.0, 100);
  std::mt19937_64 eng(20240809);

  double worst_z = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int inv = 1 + static_cast<int>(eng() % 2);
    const double pi_level = uniform_in(eng, -1.0, 1.0);
    PiecewiseControl x_opp;
    x_opp.grid = grid;
    x_opp.kind = ControlKind::TradingRate;
    const std::size_t segs = 4, block = grid.n_steps() / segs;
    for (std::size_t s = 0; s < segs; ++s) {
      const double level = uniform_in(eng, -1.0, 1.0);
      for (std::size_t k = 0; k < block; ++k) x_opp.values.push_back(level);
    }

    const PiecewiseControl pi =
        constant_control(grid, pi_level, ControlKind::AuxHolding);
    const BrownianBundle noise =
        BrownianBundle::create(grid, 20240809 + 13 * trial, 1500);
    const ValueEstimate mc = estimate_value(scn, inv, pi, x_opp, noise);

    // closed form for a constant holding against a deterministic rate
    double rate_integral = 0.0;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
      rate_integral += x_opp.values[k] * grid.dt(k);
    }
    const double sigma = scn.market.vol.constant_sigma();
    const double w_arg = scn.market.w0(inv) -
                         scn.theta_opp(inv) * pi_level * rate_integral -
                         0.5 * scn.delta(inv) * pi_level * pi_level * sigma *
                             sigma * (scn.market.T - scn.market.s);
    const double truth = cara_utility(w_arg, scn.delta(inv));
    const double z = (mc.mean - truth) / mc.std_error;
    worst_z = std::max(worst_z, std::abs(z));
  }

  detail = "worst |z| over 10 random policies " + g(worst_z);
  return worst_z < 3.0;
}

bool criterion_10(std::string& detail) {
  const ValidatedScenario scn = figure_scenario();
  const TimeGrid grid = TimeGrid::uniform(0.0, 5.0, 100);
  const TimeGrid coarse = TimeGrid::uniform(0.0, 5.0, 3);

  bool ok = true;
  detail.clear();
  for (int inv = 1; inv <= 2; ++inv) {
    const PiecewiseControl zero_fine =
        constant_control(grid, 0.0, ControlKind::TradingRate);
    const BestResponse br = best_response_path(scn, inv, zero_fine);
    double br_sup = 0.0;
    for (double v : br.pi_path.values) br_sup = std::max(br_sup, std::abs(v));
    ok = ok && br_sup == 0.0;

    const BrownianBundle noise = BrownianBundle::create(coarse, 202410, 500);
    const BruteForceResult bf = brute_force_best(
        scn, inv, constant_control(coarse, 0.0, ControlKind::TradingRate),
        {-1.0, -0.5, 0.0, 0.5, 1.0}, 3, noise);
    double bf_sup = 0.0;
    for (double v : bf.best.values) bf_sup = std::max(bf_sup, std::abs(v));
    const double expect = cara_utility(scn.market.w0(inv), scn.delta(inv));
    ok = ok && bf.exhaustive && bf_sup == 0.0 && bf.value.mean == expect &&
         bf.value.std_error == 0.0;

    if (inv > 1) detail += ", ";
    detail += "investor " + std::to_string(inv) + " value " +
              g(bf.value.mean) + " (se " + g(bf.value.std_error) + ")";
  }
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)(std::string&);
    double time_limit_s;
  };
  const Criterion criteria[] = {
      {"equilibrium trajectories and crossing time", criterion_1, 1.0},
      {"equilibrium ODE residuals", criterion_2, 1.0},
      {"flow closed form, group law, jacobian", criterion_3, 1.0},
      {"price martingale under zero controls", criterion_4, 10.0},
      {"wealth identity: exact zero and first-order decay", criterion_5, 30.0},
      {"equilibrium dominates random challengers", criterion_6, 300.0},
      {"flow invariance and representation equivalence", criterion_7, 300.0},
      {"round-trip arbitrage catalog and detector", criterion_8, 1.0},
      {"CARA-Gaussian analytic oracle", criterion_9, 60.0},
      {"zero-opponent fixed point", criterion_10, 10.0},
  };

  int failed = 0;
  int number = 0;
  for (const Criterion& c : criteria) {
    ++number;
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed >= c.time_limit_s) {
      ok = false;
      detail += " [over time budget]";
    }
    if (!ok) ++failed;
    std::printf("%s criterion %d: %s (%s) [%.2f s]\n", ok ? "PASS" : "FAIL",
                number, c.name, detail.c_str(), elapsed);
  }
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
