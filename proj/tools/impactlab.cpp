#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "impactgame/arbitrage.hpp"
#include "impactgame/bestresponse.hpp"
#include "impactgame/dynamics.hpp"
#include "impactgame/equilibrium.hpp"
#include "impactgame/flow.hpp"
#include "impactgame/model.hpp"
#include "impactgame/oracle.hpp"
#include "impactgame/scenario_io.hpp"

using json = nlohmann::ordered_json;
using namespace impactgame;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(std::max(m2 / static_cast<double>(n - 1), 0.0) /
                     static_cast<double>(n));
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string out_file(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

ImpactFunction impact_from_config(const ScenarioConfig& cfg) {
  const double theta = cfg.kappa_theta > 0.0 ? cfg.kappa_theta : cfg.theta1;
  const double c = cfg.kappa_c;
  if (cfg.kappa == "linear") return ImpactFunction::linear(theta);
  if (cfg.kappa == "quadratic_odd") {
    return ImpactFunction::custom([](double x) { return -x * std::abs(x); });
  }
  if (cfg.kappa == "affine") {
    return ImpactFunction::custom([c](double x) { return -x + c; });
  }
  // jump: linear away from zero, offset exactly at zero
  return ImpactFunction::custom(
      [c](double x) { return x == 0.0 ? c : -x; });
}

PiecewiseControl constant_control(const TimeGrid& grid, double value,
                                  ControlKind kind) {
  PiecewiseControl c;
  c.grid = grid;
  c.values.assign(grid.n_steps(), value);
  c.kind = kind;
  return c;
}

PiecewiseControl sampled_rate(const TimeGrid& grid,
                              const std::function<double(double)>& f) {
  PiecewiseControl c;
  c.grid = grid;
  c.kind = ControlKind::TradingRate;
  c.values.resize(grid.n_steps());
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    c.values[k] = f(grid.nodes[k]);
  }
  return c;
}

// ---------------------------------------------------------------------------
// verify machinery

struct CheckRow {
  std::string check;
  std::string digest;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = false;
};

class CheckList {
 public:
  explicit CheckList(std::uint64_t seed) : seed_(seed) {}

  // Deterministic check: |measured - reference| must stay within tol.
  void deterministic(const std::string& name, double measured,
                     double reference, double tol) {
    CheckRow row;
    row.check = name;
    row.digest = digest(name);
    row.mean_a = measured;
    row.mean_b = reference;
    row.se = tol;
    const double err = measured - reference;
    row.z = tol > 0.0 ? err / tol : (err == 0.0 ? 0.0 : 1e300);
    row.pass = std::abs(row.z) <= 1.0;
    rows_.push_back(row);
  }

  // Statistical check: |z| must stay under the gate.
  void statistical(const std::string& name, double mean_a, double mean_b,
                   double se, double z, double gate) {
    CheckRow row;
    row.check = name;
    row.digest = digest(name);
    row.mean_a = mean_a;
    row.mean_b = mean_b;
    row.se = se;
    row.z = z;
    row.pass = std::abs(z) < gate;
    rows_.push_back(row);
  }

  // Boolean expectation, reported with its supporting quantity.
  void expect(const std::string& name, bool ok, double value) {
    CheckRow row;
    row.check = name;
    row.digest = digest(name);
    row.mean_a = value;
    row.mean_b = 0.0;
    row.se = 0.0;
    row.z = ok ? 0.0 : 1e300;
    row.pass = ok;
    rows_.push_back(row);
  }

  const std::vector<CheckRow>& rows() const { return rows_; }

 private:
  std::string digest(const std::string& name) const {
    return fnv1a_hex(name + "|seed=" + std::to_string(seed_));
  }
  std::uint64_t seed_;
  std::vector<CheckRow> rows_;
};

double state_distance(const GameState& a, const GameState& b) {
  double d = 0.0;
  d = std::max(d, std::abs(a.S - b.S));
  d = std::max(d, std::abs(a.pi_1 - b.pi_1));
  d = std::max(d, std::abs(a.pi_2 - b.pi_2));
  d = std::max(d, std::abs(a.W_1 - b.W_1));
  d = std::max(d, std::abs(a.W_2 - b.W_2));
  return d;
}

void run_flow_suite(const ScenarioConfig& cfg, CheckList& checks) {
  const ValidatedScenario scn = to_scenario(cfg);
  const MarketParams& mkt = scn.market;
  std::mt19937_64 rng(cfg.seed ^ 0xf10af10aULL);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  std::vector<GameState> states;
  for (int i = 0; i < 10; ++i) {
    states.push_back(GameState{uni(1.0, 20.0), uni(-2.0, 2.0), uni(-2.0, 2.0),
                               uni(-5.0, 5.0), uni(-5.0, 5.0)});
  }

  double worst_ode = 0.0;
  for (const GameState& y : states) {
    for (int j = 0; j <= 20; ++j) {
      const double q = -5.0 + 0.5 * j;
      for (int inv = 1; inv <= 2; ++inv) {
        const GameState a = flow_full(q, y, inv, mkt);
        const GameState b = flow_ode_oracle(q, y, inv, mkt, 200);
        worst_ode = std::max(worst_ode, state_distance(a, b));
      }
    }
  }
  checks.deterministic("flow-closed-vs-ode-oracle", worst_ode, 0.0, 1e-8);

  double worst_group = 0.0;
  for (const GameState& y : states) {
    for (double q1 : {-2.0, 0.7}) {
      for (double q2 : {-1.3, 0.4}) {
        for (int inv = 1; inv <= 2; ++inv) {
          const GameState a = flow_full(q2, flow_full(q1, y, inv, mkt), inv, mkt);
          const GameState b = flow_full(q1 + q2, y, inv, mkt);
          worst_group = std::max(worst_group, state_distance(a, b));
        }
      }
    }
  }
  checks.deterministic("flow-group-law", worst_group, 0.0, 1e-13);

  double worst_jac = 0.0;
  const double h = 1e-5;
  for (const GameState& y : states) {
    for (double q : {-1.5, 0.8}) {
      for (int inv = 1; inv <= 2; ++inv) {
        const Matrix5 jac = flow_jacobian(q, inv, mkt);
        for (int j = 0; j < 5; ++j) {
          GameState yp = y, ym = y;
          double* coords_p[5] = {&yp.S, &yp.pi_1, &yp.pi_2, &yp.W_1, &yp.W_2};
          double* coords_m[5] = {&ym.S, &ym.pi_1, &ym.pi_2, &ym.W_1, &ym.W_2};
          *coords_p[j] += h;
          *coords_m[j] -= h;
          const GameState fp = flow_full(q, yp, inv, mkt);
          const GameState fm = flow_full(q, ym, inv, mkt);
          const double col[5] = {
              (fp.S - fm.S) / (2 * h), (fp.pi_1 - fm.pi_1) / (2 * h),
              (fp.pi_2 - fm.pi_2) / (2 * h), (fp.W_1 - fm.W_1) / (2 * h),
              (fp.W_2 - fm.W_2) / (2 * h)};
          for (int i = 0; i < 5; ++i) {
            worst_jac = std::max(worst_jac, std::abs(col[i] - jac[i][j]));
          }
        }
      }
    }
  }
  checks.deterministic("flow-jacobian-vs-fd", worst_jac, 0.0, 1e-7);

  double worst_quot = 0.0;
  for (const GameState& y : states) {
    for (double q : {-2.0, 0.5, 1.7}) {
      for (int inv = 1; inv <= 2; ++inv) {
        const AuxState za = aux_coords(flow_full(q, y, inv, mkt), inv, mkt);
        const AuxState zb = aux_coords(y, inv, mkt);
        worst_quot = std::max(
            worst_quot,
            std::max(std::max(std::abs(za.P - zb.P), std::abs(za.pi_opp - zb.pi_opp)),
                     std::max(std::abs(za.w_own - zb.w_own),
                              std::abs(za.w_opp - zb.w_opp))));
      }
    }
  }
  checks.deterministic("flow-quotient-invariance", worst_quot, 0.0, 1e-13);

  double worst_id = 0.0;
  for (const GameState& y : states) {
    for (int inv = 1; inv <= 2; ++inv) {
      worst_id = std::max(worst_id, state_distance(flow_full(0.0, y, inv, mkt), y));
    }
  }
  checks.deterministic("flow-zero-is-identity", worst_id, 0.0, 1e-15);
}

void run_dynamics_suite(const ScenarioConfig& cfg, CheckList& checks) {
  const ValidatedScenario scn = to_scenario(cfg);
  const TimeGrid grid = config_grid(cfg);

  {  // driftless price under zero controls
    const BrownianBundle noise =
        BrownianBundle::create(grid, cfg.seed, cfg.n_paths);
    const PiecewiseControl zero =
        constant_control(grid, 0.0, ControlKind::TradingRate);
    Welford st;
    for_each_game_path(scn, zero, zero, noise,
                       [&](std::size_t, const StatePath& path) {
                         st.add(path.states.back().S);
                       });
    const double se = st.se();
    const double z = se > 0.0 ? (st.mean - cfg.S0) / se : 0.0;
    checks.statistical("dynamics-price-martingale", st.mean, cfg.S0, se, z, 4.0);
  }

  {  // discrete wealth identity: residual equals (theta/2) sum x^2 dt^2
    const BrownianBundle noise = BrownianBundle::create(grid, cfg.seed + 1, 1);
    const PiecewiseControl x1 =
        constant_control(grid, 0.4, ControlKind::TradingRate);
    const PiecewiseControl x2 =
        constant_control(grid, -0.25, ControlKind::TradingRate);
    const StatePath path = simulate_game_path(scn, x1, x2, noise, 0);
    const double res = wealth_identity_residual(path, 1, scn);
    double expect = 0.0;
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
      expect += 0.5 * cfg.theta1 * 0.4 * 0.4 * grid.dt(k) * grid.dt(k);
    }
    checks.deterministic("dynamics-wealth-identity-value", res, expect,
                         1e-12 * std::max(1.0, expect));

    const TimeGrid fine = TimeGrid::uniform(cfg.s, cfg.T, 2 * cfg.n_steps);
    const BrownianBundle noise2 = BrownianBundle::create(fine, cfg.seed + 1, 1);
    const StatePath path2 = simulate_game_path(
        scn, constant_control(fine, 0.4, ControlKind::TradingRate),
        constant_control(fine, -0.25, ControlKind::TradingRate), noise2, 0);
    const double res2 = wealth_identity_residual(path2, 1, scn);
    checks.deterministic("dynamics-wealth-identity-halving-ratio", res / res2,
                         2.0, 0.4);
  }

  {  // blip transport against the closed-form flow, noiseless
    ScenarioConfig quiet = cfg;
    quiet.sigma = 0.0;
    const ValidatedScenario scn0 = to_scenario(quiet);
    const double eps = 0.05, q = 0.8;
    const TimeGrid bgrid = TimeGrid::uniform(cfg.s, cfg.s + eps, 200);
    const BrownianBundle bnoise = BrownianBundle::create(bgrid, cfg.seed, 1);
    const GameState via_blip = blip_transport(scn0, 1, q, eps, bnoise, 0);
    const GameState y0{quiet.S0, quiet.pi1_0, quiet.pi2_0, quiet.W1_0,
                       quiet.W2_0};
    const GameState via_flow = flow_full(q, y0, 1, scn0.market);
    checks.deterministic("dynamics-blip-noiseless-flow",
                         state_distance(via_blip, via_flow), 0.0, 1e-12);
  }

  {  // blip error shrinks as the window does
    const GameState y0{cfg.S0, cfg.pi1_0, cfg.pi2_0, cfg.W1_0, cfg.W2_0};
    const GameState target = flow_full(0.8, y0, 1, scn.market);
    auto mean_err = [&](double eps) {
      const TimeGrid bgrid = TimeGrid::uniform(cfg.s, cfg.s + eps, 50);
      const BrownianBundle bnoise = BrownianBundle::create(bgrid, cfg.seed, 100);
      double total = 0.0;
      for (std::size_t p = 0; p < 100; ++p) {
        total += state_distance(blip_transport(scn, 1, 0.8, eps, bnoise, p),
                                target);
      }
      return total / 100.0;
    };
    const double big = mean_err(0.1);
    const double small = mean_err(0.001);
    checks.deterministic("dynamics-blip-window-shrink", small, 0.0, 0.5 * big);
  }

  {  // counter-based seeding: same (seed, path) means same increments
    const BrownianBundle a = BrownianBundle::create(grid, cfg.seed, 10);
    const BrownianBundle b = BrownianBundle::create(grid, cfg.seed, 10);
    std::vector<double> da, db;
    a.fill_path(7, da);
    b.fill_path(7, db);
    double worst = 0.0;
    for (std::size_t k = 0; k < da.size(); ++k) {
      worst = std::max(worst, std::abs(da[k] - db[k]));
    }
    checks.deterministic("dynamics-seeding-reproducible", worst, 0.0, 1e-15);
  }

  {  // coarsened bundles aggregate the very same master increments
    const TimeGrid master = TimeGrid::uniform(cfg.s, cfg.T, 12);
    const TimeGrid coarse = TimeGrid::uniform(cfg.s, cfg.T, 4);
    const BrownianBundle mb = BrownianBundle::create(master, cfg.seed, 3);
    const BrownianBundle cb = mb.coarsened(coarse);
    std::vector<double> dm, dc;
    mb.fill_path(2, dm);
    cb.fill_path(2, dc);
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      double sum = 0.0;
      for (std::size_t m = 3 * k; m < 3 * (k + 1); ++m) sum += dm[m];
      worst = std::max(worst, std::abs(sum - dc[k]));
    }
    checks.deterministic("dynamics-crn-aggregation", worst, 0.0, 1e-15);
  }
}

void run_bestresponse_suite(const ScenarioConfig& cfg, CheckList& checks) {
  auto make_scn = [&](double lo, double hi) {
    MarketParams mkt;
    mkt.theta_1 = 1.0;
    mkt.theta_2 = 1.0;
    mkt.vol = VolatilitySpec::constant(1.0);
    mkt.s = 0.0;
    mkt.T = 1.0;
    mkt.s0 = 10.0;
    return validate_market(mkt, Preferences{1.0, 1.0}, ControlBounds{lo, hi});
  };

  const ValidatedScenario wide = make_scn(-10.0, 10.0);
  const ValidatedScenario tight = make_scn(-2.0, 2.0);

  checks.deterministic("bestresponse-pointwise-formula",
                       optimal_aux_pointwise(-1.0, 10.0, wide, 1), 1.0, 1e-12);
  checks.deterministic("bestresponse-pointwise-clamp",
                       optimal_aux_pointwise(-100.0, 10.0, tight, 1), 2.0, 1e-15);
  checks.deterministic("bestresponse-zero-opponent",
                       optimal_aux_pointwise(0.0, 10.0, wide, 1), 0.0, 0.0);

  checks.expect("bestresponse-region-upper-boundary",
                classify_region(-2.0, 10.0, tight, 1) ==
                    RegionLabel::ContinuationUpper,
                -2.0);
  checks.expect("bestresponse-region-lower",
                classify_region(100.0, 10.0, tight, 1) ==
                    RegionLabel::ContinuationLower,
                100.0);
  checks.expect("bestresponse-region-control",
                classify_region(-1.0, 10.0, tight, 1) == RegionLabel::Control,
                -1.0);

  {
    double worst_rise = 0.0;
    double prev = optimal_aux_pointwise(-3.0, 10.0, tight, 1);
    for (double x = -2.9; x <= 3.0; x += 0.1) {
      const double cur = optimal_aux_pointwise(x, 10.0, tight, 1);
      worst_rise = std::max(worst_rise, cur - prev);
      prev = cur;
    }
    checks.deterministic("bestresponse-monotone-in-opponent", worst_rise, 0.0,
                         1e-15);
  }

  {  // equilibrium rates are mutual best responses
    const ScenarioConfig fig = default_config();
    const ValidatedScenario scn = to_scenario(fig);
    const EquilibriumSolution sol = nash_equilibrium(scn);
    const TimeGrid grid = TimeGrid::uniform(fig.s, fig.T, 100);
    double worst = 0.0;
    for (int inv = 1; inv <= 2; ++inv) {
      const int opp = 3 - inv;
      const PiecewiseControl x_opp =
          sampled_rate(grid, [&](double t) { return sol.x(opp, t); });
      const BestResponse br = best_response_path(scn, inv, x_opp);
      for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        worst = std::max(worst, std::abs(br.pi_path.values[k] -
                                         sol.pi(inv, grid.nodes[k])));
      }
    }
    checks.deterministic("bestresponse-mutual-equilibrium", worst, 0.0, 1e-9);
  }
}

void run_oracle_suite(const ScenarioConfig& cfg, CheckList& checks) {
  const ValidatedScenario scn = to_scenario(cfg);
  const TimeGrid grid = config_grid(cfg);
  const double amp =
      std::min(1.0, 0.45 * std::min(-cfg.pi_lo, cfg.pi_hi));
  const PiecewiseControl zero_rate =
      constant_control(grid, 0.0, ControlKind::TradingRate);
  const PiecewiseControl opp_rate =
      constant_control(grid, 0.2, ControlKind::TradingRate);

  const BrownianBundle noise = BrownianBundle::create(grid, cfg.seed, cfg.n_paths);

  {  // flat-at-zero policy has a deterministic value
    const ValueEstimate v = estimate_value(
        scn, 1, constant_control(grid, 0.0, ControlKind::AuxHolding),
        zero_rate, noise);
    const double expect = cara_utility(cfg.W1_0, cfg.delta1);
    checks.deterministic("oracle-zero-policy-exact",
                         std::abs(v.mean - expect) + v.std_error, 0.0, 1e-15);
  }

  // statistical checks run at a moderate holding for the less risk averse
  // investor; large delta * pi * sigma makes the utility so heavy tailed
  // that sample standard errors stop being informative
  const double stat_amp = std::min(0.5, amp);
  const int stat_inv = (cfg.delta1 <= cfg.delta2) ? 1 : 2;

  {  // Monte Carlo against the closed-form constant-policy value
    const PiecewiseControl pi =
        constant_control(grid, stat_amp, ControlKind::AuxHolding);
    const ValueEstimate v = estimate_value(scn, stat_inv, pi, opp_rate, noise);
    const double truth = cara_gaussian_value(scn, stat_inv, pi, opp_rate);
    const double z = v.std_error > 0.0 ? (v.mean - truth) / v.std_error : 0.0;
    checks.statistical("oracle-cara-gaussian", v.mean, truth, v.std_error, z,
                       3.0);
  }

  {  // standard errors shrink like 1/sqrt(paths)
    const PiecewiseControl pi =
        constant_control(grid, stat_amp, ControlKind::AuxHolding);
    const std::size_t big = std::max<std::size_t>(cfg.n_paths, 160);
    const BrownianBundle nb = BrownianBundle::create(grid, cfg.seed, big);
    const BrownianBundle ns = BrownianBundle::create(grid, cfg.seed, big / 4);
    const ValueEstimate vb = estimate_value(scn, stat_inv, pi, opp_rate, nb);
    const ValueEstimate vs = estimate_value(scn, stat_inv, pi, opp_rate, ns);
    const double ratio = vs.std_error / vb.std_error;
    checks.deterministic("oracle-clt-scaling", ratio, 2.0, 0.4);
  }

  {  // value unchanged when the start is dragged along the flow
    const GameState y0{cfg.S0, cfg.pi1_0, cfg.pi2_0, cfg.W1_0, cfg.W2_0};
    const InvarianceResult inv =
        invariance_check(scn, 1, y0, std::min(0.5, amp), opp_rate, noise);
    checks.statistical("oracle-invariance-flow", inv.at_state.mean,
                       inv.at_flow.mean,
                       std::hypot(inv.at_state.std_error, inv.at_flow.std_error),
                       inv.z, 3.0);
  }

  {  // original and auxiliary representations price the same candidate
    const PiecewiseControl pi =
        constant_control(grid, amp, ControlKind::AuxHolding);
    const EquivalenceResult eq = equivalence_check(scn, 1, pi, opp_rate, noise);
    checks.statistical("oracle-equivalence-representations", eq.game_side.mean,
                       eq.aux_side.mean,
                       std::hypot(eq.game_side.std_error, eq.aux_side.std_error),
                       eq.z, 3.0);
  }

  {  // midpoint utility dominates the mixture
    const ConcavityReport rep = concavity_check(
        scn, 1, constant_control(grid, amp, ControlKind::AuxHolding),
        constant_control(grid, -amp, ControlKind::AuxHolding), 0.5, zero_rate,
        noise);
    checks.expect("oracle-concavity-midpoint", rep.pass, rep.slack);
  }

  {  // brute force agrees that doing nothing beats any move
    const std::size_t n_int = 4;
    const TimeGrid coarse = TimeGrid::uniform(cfg.s, cfg.T, n_int);
    const BrownianBundle cnoise = BrownianBundle::create(
        coarse, cfg.seed, std::min<std::size_t>(cfg.n_paths, 2000));
    const BruteForceResult bf = brute_force_best(
        scn, 1, constant_control(coarse, 0.0, ControlKind::TradingRate),
        {-amp, 0.0, amp}, n_int, cnoise);
    double worst = 0.0;
    for (double v : bf.best.values) worst = std::max(worst, std::abs(v));
    worst = std::max(worst, std::abs(bf.value.mean -
                                     cara_utility(cfg.W1_0, cfg.delta1)));
    worst = std::max(worst, bf.value.std_error);
    checks.deterministic("oracle-brute-force-zero-opponent", worst, 0.0, 1e-15);
  }
}

void run_arbitrage_suite(const ScenarioConfig& cfg, CheckList& checks) {
  const double theta = cfg.kappa_theta > 0.0 ? cfg.kappa_theta : cfg.theta1;
  const ImpactFunction lin = ImpactFunction::linear(theta);
  const double T = cfg.arb_T;

  {  // linear impact admits no gain on any catalog trip
    double worst = 0.0;
    for (double a : cfg.arb_rates) {
      const RoundTrip sym = make_roundtrip(TripKind::SymmetricBlock, a, a, T);
      worst = std::max(worst, std::abs(expected_gain(lin, sym)));
      worst = std::max(worst, std::abs(expected_gain(lin, mirrored(sym))));
      for (double b : cfg.arb_rates) {
        worst = std::max(worst, std::abs(expected_gain(
                                    lin, make_roundtrip(TripKind::BuyFast, a, b, T))));
        worst = std::max(worst, std::abs(expected_gain(
                                    lin, make_roundtrip(TripKind::SellFast, a, b, T))));
      }
    }
    checks.deterministic("arbitrage-linear-no-gain", worst, 0.0, 1e-13);
  }

  {  // detector on the configured impact function
    const ImpactFunction kappa = impact_from_config(cfg);
    const ArbitrageVerdict verdict =
        detect_dynamic_arbitrage(kappa, cfg.arb_rates, cfg.arb_rates, T);
    std::string name = "arbitrage-detector";
    if (verdict.found) {
      name += "[" + trip_kind_name(verdict.witness->kind) +
              " alpha=" + fmt17(verdict.witness->alpha) +
              " beta=" + fmt17(verdict.witness->beta) + "]";
    }
    const bool expected = (cfg.kappa != "linear");
    checks.expect(name, verdict.found == expected, verdict.gain);
  }

  {  // closed-form displays against the numeric integrator
    const ImpactFunction quad =
        ImpactFunction::custom([](double x) { return -x * std::abs(x); });
    const ImpactFunction aff =
        ImpactFunction::custom([&](double x) { return -x + cfg.kappa_c; });
    double worst = 0.0;
    auto compare = [&](const ImpactFunction& kappa, TripKind kind, double a,
                       double b) {
      const RoundTrip trip = make_roundtrip(kind, a, b, T);
      double closed = 0.0;
      switch (kind) {
        case TripKind::SymmetricBlock:
          closed = -(a * T * T / 8.0) * (kappa(a) + kappa(-a));
          break;
        case TripKind::SellFast:
          closed = -(a * b * T * T / (2.0 * (a + b) * (a + b))) *
                   (a * kappa(-b) + b * kappa(a));
          break;
        case TripKind::BuyFast:
          closed = (a * b * T * T / (2.0 * (a + b) * (a + b))) *
                   (a * kappa(-b) + b * kappa(a));
          break;
        case TripKind::ThreePhase:
          closed = (a * T * T / 18.0) * (kappa(-a) + kappa(a)) +
                   kappa(0.0) * a * T * T / 9.0;
          break;
      }
      worst = std::max(worst, std::abs(expected_gain(kappa, trip) - closed));
    };
    for (const ImpactFunction* kappa : {&quad, &aff}) {
      compare(*kappa, TripKind::SymmetricBlock, 1.0, 1.0);
      compare(*kappa, TripKind::SellFast, 1.0, 2.0);
      compare(*kappa, TripKind::BuyFast, 1.0, 2.0);
      compare(*kappa, TripKind::ThreePhase, 0.3, 1.0);
    }
    checks.deterministic("arbitrage-closed-form-soundness", worst, 0.0, 1e-10);
  }

  {  // two-block gains scale like the horizon squared
    const ImpactFunction quad =
        ImpactFunction::custom([](double x) { return -x * std::abs(x); });
    const double g1 =
        expected_gain(quad, make_roundtrip(TripKind::BuyFast, 1.0, 2.0, T));
    const double g2 = expected_gain(
        quad, make_roundtrip(TripKind::BuyFast, 1.0, 2.0, 2.0 * T));
    checks.deterministic("arbitrage-horizon-scaling", g2 / g1, 4.0, 1e-12);
  }

  {  // nonzero kappa(0) is caught by the probe
    const double c = cfg.kappa_c;
    const ImpactFunction jump =
        ImpactFunction::custom([c](double x) { return x == 0.0 ? c : -x; });
    const ArbitrageVerdict verdict =
        detect_dynamic_arbitrage(jump, cfg.arb_rates, cfg.arb_rates, T);
    const double expect = T * T / 9.0 * c * c;
    checks.deterministic("arbitrage-zero-rate-probe",
                         verdict.found ? verdict.gain : 0.0, expect, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_equilibrium(const ScenarioConfig& cfg) {
  const ValidatedScenario scn = to_scenario(cfg);
  const ConditionsReport report = check_conditions(scn);

  json cond;
  cond["cond_i"] = report.cond_i;
  cond["cond_ii"] = report.cond_ii;
  cond["cond_iii"] = report.cond_iii;
  cond["varphi"] = report.varphi;
  cond["max_abs_pi0"] = report.max_abs_pi0;
  cond["lhs_iii"] = report.lhs_iii;
  cond["rhs_iii"] = report.rhs_iii;
  cond["all"] = report.all();
  write_json(out_file(cfg.output_dir, "conditions.json"), cond);

  if (!report.all()) {
    std::cerr << "equilibrium conditions failed:";
    if (!report.cond_i) std::cerr << " cond_i";
    if (!report.cond_ii) std::cerr << " cond_ii";
    if (!report.cond_iii) std::cerr << " cond_iii";
    std::cerr << "\n";
    return 2;
  }

  const EquilibriumSolution sol = nash_equilibrium(scn);
  const TimeGrid grid = config_grid(cfg);

  std::string csv = "t,pi1,pi2,x1,x2\n";
  for (double t : grid.nodes) {
    csv += fmt17(t) + "," + fmt17(sol.pi1(t)) + "," + fmt17(sol.pi2(t)) + "," +
           fmt17(sol.x1(t)) + "," + fmt17(sol.x2(t)) + "\n";
  }
  write_text(out_file(cfg.output_dir, "equilibrium.csv"), csv);

  json crossing;
  for (int inv = 1; inv <= 2; ++inv) {
    const auto tc = crossing_time(sol, inv);
    const std::string key = "investor" + std::to_string(inv);
    if (tc) {
      crossing[key] = *tc;
    } else {
      crossing[key] = nullptr;
    }
  }
  write_json(out_file(cfg.output_dir, "crossing.json"), crossing);

  std::cout << "chi = " << fmt17(sol.constants().chi)
            << ", varphi = " << fmt17(sol.constants().varphi) << "\n";
  std::cout << "wrote equilibrium.csv, conditions.json, crossing.json to "
            << cfg.output_dir << "\n";
  return 0;
}

int cmd_simulate(const ScenarioConfig& cfg, const std::string& x1_file,
                 const std::string& x2_file, std::size_t dump_paths) {
  const ValidatedScenario scn = to_scenario(cfg);
  const TimeGrid grid = config_grid(cfg);
  const PiecewiseControl x1 =
      x1_file.empty() ? constant_control(grid, 0.0, ControlKind::TradingRate)
                      : read_rate_csv(x1_file, grid);
  const PiecewiseControl x2 =
      x2_file.empty() ? constant_control(grid, 0.0, ControlKind::TradingRate)
                      : read_rate_csv(x2_file, grid);

  const BrownianBundle noise =
      BrownianBundle::create(grid, cfg.seed, cfg.n_paths);

  std::string csv = "path,t,S,pi1,pi2,W1,W2\n";
  Welford sT, w1T, w2T;
  double worst_residual_1 = 0.0, worst_residual_2 = 0.0;
  const SimDiagnostics diag = for_each_game_path(
      scn, x1, x2, noise, [&](std::size_t p, const StatePath& path) {
        if (p < dump_paths) {
          for (std::size_t m = 0; m < path.states.size(); ++m) {
            const GameState& y = path.states[m];
            csv += std::to_string(p) + "," + fmt17(grid.nodes[m]) + "," +
                   fmt17(y.S) + "," + fmt17(y.pi_1) + "," + fmt17(y.pi_2) +
                   "," + fmt17(y.W_1) + "," + fmt17(y.W_2) + "\n";
          }
        }
        sT.add(path.states.back().S);
        w1T.add(path.states.back().W_1);
        w2T.add(path.states.back().W_2);
        worst_residual_1 =
            std::max(worst_residual_1, wealth_identity_residual(path, 1, scn));
        worst_residual_2 =
            std::max(worst_residual_2, wealth_identity_residual(path, 2, scn));
      });
  write_text(out_file(cfg.output_dir, "paths.csv"), csv);

  json summary;
  summary["n_paths"] = cfg.n_paths;
  summary["n_steps"] = cfg.n_steps;
  summary["seed"] = cfg.seed;
  summary["terminal"] = {
      {"S", {{"mean", sT.mean}, {"se", sT.se()}}},
      {"W1", {{"mean", w1T.mean}, {"se", w1T.se()}}},
      {"W2", {{"mean", w2T.mean}, {"se", w2T.se()}}}};
  summary["wealth_identity_max_residual"] = {{"investor1", worst_residual_1},
                                             {"investor2", worst_residual_2}};
  summary["diagnostics"] = {{"flagged_paths", diag.flagged_paths},
                            {"max_state_norm", diag.max_state_norm}};
  write_json(out_file(cfg.output_dir, "summary.json"), summary);

  std::cout << "mean S_T = " << fmt17(sT.mean) << " (se " << fmt17(sT.se())
            << "), |mean - S0| = " << fmt17(std::abs(sT.mean - cfg.S0)) << "\n";
  std::cout << "wrote paths.csv, summary.json to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_best_response(const ScenarioConfig& cfg, int investor,
                      const std::string& x_opp_file) {
  const ValidatedScenario scn = to_scenario(cfg);
  const TimeGrid grid = config_grid(cfg);

  PiecewiseControl x_opp;
  if (!x_opp_file.empty()) {
    x_opp = read_rate_csv(x_opp_file, grid);
  } else {
    const ConditionsReport report = check_conditions(scn);
    if (!report.all()) {
      std::cerr << "no opponent schedule given and the equilibrium fallback "
                   "is unavailable (conditions fail)\n";
      return 2;
    }
    const EquilibriumSolution sol = nash_equilibrium(scn);
    const int opp = 3 - investor;
    x_opp = sampled_rate(grid, [&](double t) { return sol.x(opp, t); });
  }

  const BestResponse br = best_response_path(scn, investor, x_opp);

  std::string csv = "t,pi_star,x_star,region\n";
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    csv += fmt17(grid.nodes[k]) + "," + fmt17(br.pi_path.values[k]) + "," +
           fmt17(br.rate_path.values[k]) + "," + region_name(br.regions[k]) +
           "\n";
  }
  write_text(out_file(cfg.output_dir, "best_response.csv"), csv);

  std::cout << "initial jump = " << fmt17(br.initial_jump) << "\n";
  if (br.regularity_warning) {
    std::cout << "warning: " << br.warning_reason << "\n";
  }
  std::cout << "wrote best_response.csv to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_arbitrage(const ScenarioConfig& cfg) {
  const ImpactFunction kappa = impact_from_config(cfg);
  const ArbitrageVerdict verdict = detect_dynamic_arbitrage(
      kappa, cfg.arb_rates, cfg.arb_rates, cfg.arb_T);

  json j;
  j["verdict"] = verdict.found ? "Arbitrage" : "NoArbitrageFound";
  if (verdict.found) {
    j["witness"] = {{"kind", trip_kind_name(verdict.witness->kind)},
                    {"alpha", verdict.witness->alpha},
                    {"beta", verdict.witness->beta},
                    {"T", verdict.witness->horizon}};
  } else {
    j["witness"] = nullptr;
  }
  j["gain"] = verdict.gain;
  write_json(out_file(cfg.output_dir, "arbitrage.json"), j);

  if (verdict.found) {
    std::cout << "arbitrage: " << trip_kind_name(verdict.witness->kind)
              << " alpha=" << fmt17(verdict.witness->alpha)
              << " beta=" << fmt17(verdict.witness->beta)
              << " gain=" << fmt17(verdict.gain) << "\n";
  } else {
    std::cout << "no arbitrage found (kappa = " << cfg.kappa << ")\n";
  }
  std::cout << "wrote arbitrage.json to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_verify(const ScenarioConfig& cfg, const std::string& suite) {
  CheckList checks(cfg.seed);
  if (suite == "flow" || suite == "all") run_flow_suite(cfg, checks);
  if (suite == "dynamics" || suite == "all") run_dynamics_suite(cfg, checks);
  if (suite == "bestresponse" || suite == "all")
    run_bestresponse_suite(cfg, checks);
  if (suite == "oracle" || suite == "all") run_oracle_suite(cfg, checks);
  if (suite == "arbitrage" || suite == "all") run_arbitrage_suite(cfg, checks);

  json report;
  report["suite"] = suite;
  report["checks"] = json::array();
  std::size_t failed = 0;
  for (const CheckRow& row : checks.rows()) {
    json r;
    r["check"] = row.check;
    r["inputs_digest"] = row.digest;
    r["mean_a"] = row.mean_a;
    r["mean_b"] = row.mean_b;
    r["se"] = row.se;
    r["z"] = row.z;
    r["verdict"] = row.pass ? "pass" : "fail";
    report["checks"].push_back(r);
    if (!row.pass) ++failed;
    std::cout << (row.pass ? "PASS " : "FAIL ") << row.check
              << " (z=" << fmt17(row.z) << ")\n";
  }
  report["n_checks"] = checks.rows().size();
  report["n_failed"] = failed;
  write_json(out_file(cfg.output_dir, "verify_report.json"), report);

  std::cout << checks.rows().size() << " checks, " << failed << " failed\n";
  return failed == 0 ? 0 : 4;
}

ScenarioConfig load_config(const std::string& config_path, bool seed_given,
                           std::uint64_t seed, const std::string& out_dir) {
  ScenarioConfig cfg =
      config_path.empty() ? default_config() : parse_config_file(config_path);
  if (seed_given) cfg.seed = seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for a two-investor trading game with "
               "permanent linear price impact"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario file (key = value)");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* eq = app.add_subcommand(
      "equilibrium", "closed-form equilibrium trajectories and rates");
  add_common(eq);

  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte Carlo simulation of the controlled price game");
  add_common(sim);
  std::string x1_file, x2_file;
  std::size_t dump_paths = 10;
  sim->add_option("--x1", x1_file, "rate schedule CSV for investor 1");
  sim->add_option("--x2", x2_file, "rate schedule CSV for investor 2");
  sim->add_option("--dump-paths", dump_paths,
                  "number of paths written to paths.csv");

  CLI::App* br = app.add_subcommand(
      "best-response", "pointwise best response to an opponent schedule");
  add_common(br);
  int investor = 1;
  std::string x_opp_file;
  br->add_option("--investor", investor, "responding investor (1 or 2)")
      ->check(CLI::Range(1, 2));
  br->add_option("--x-opp", x_opp_file,
                 "opponent rate CSV (default: equilibrium rates)");

  CLI::App* arb = app.add_subcommand(
      "arbitrage", "round-trip catalog search on the configured impact");
  add_common(arb);

  CLI::App* ver =
      app.add_subcommand("verify", "run property suites and report checks");
  add_common(ver);
  std::string suite = "all";
  ver->add_option("suite", suite, "flow|dynamics|bestresponse|oracle|arbitrage|all")
      ->check(CLI::IsMember(
          {"flow", "dynamics", "bestresponse", "oracle", "arbitrage", "all"}));

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* active = app.get_subcommands().front();
    const bool seed_given = active->count("--seed") > 0;
    const ScenarioConfig cfg = load_config(config_path, seed_given, seed, out_dir);
    if (*eq) return cmd_equilibrium(cfg);
    if (*sim) return cmd_simulate(cfg, x1_file, x2_file, dump_paths);
    if (*br) return cmd_best_response(cfg, investor, x_opp_file);
    if (*arb) return cmd_arbitrage(cfg);
    if (*ver) return cmd_verify(cfg, suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario:\n";
    for (const Violation& v : e.violations()) {
      std::cerr << "  " << v.field << ": " << v.reason << "\n";
    }
    return 1;
  } catch (const ConditionsFailed&) {
    std::cerr << "equilibrium conditions not satisfied\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
