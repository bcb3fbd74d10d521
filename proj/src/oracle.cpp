#include "impactgame/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "impactgame/bestresponse.hpp"
#include "impactgame/flow.hpp"

namespace impactgame {

namespace {

constexpr double kClampLimit = 1e12;

struct MeanAcc {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    const double var = m2 / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

void require_aux_pair(const ValidatedScenario& scenario,
                      const PiecewiseControl& pi, const PiecewiseControl& x_opp,
                      const TimeGrid& grid) {
  pi.check_shape();
  x_opp.check_shape();
  if (pi.kind != ControlKind::AuxHolding) {
    throw GridMismatch("estimate_value: pi must be a holdings control");
  }
  if (x_opp.kind != ControlKind::TradingRate) {
    throw GridMismatch("estimate_value: x_opp must be a rate control");
  }
  if (!pi.grid.same_as(grid) || !x_opp.grid.same_as(grid)) {
    throw GridMismatch("estimate_value: controls must live on the noise grid");
  }
  for (double q : pi.values) {
    if (q < scenario.bounds.pi_lo || q > scenario.bounds.pi_hi) {
      throw BoundsViolation("estimate_value: holding outside the bounds");
    }
  }
}

ValueEstimate finish(const MeanAcc& acc, std::uint64_t seed,
                     std::size_t flagged) {
  ValueEstimate v;
  v.mean = acc.mean;
  v.std_error = acc.se();
  v.n_paths = acc.n;
  v.seed = seed;
  v.n_flagged = flagged;
  return v;
}

// Terminal own wealth of the jump-transport strategy: start at y, jump to
// the first holding via the exact flow, hold each value over its interval
// (wealth accrues at the held position), jump again at each node.
double jump_strategy_terminal(const ValidatedScenario& scenario, int investor,
                              const GameState& y_start,
                              const std::vector<double>& pi_hat,
                              const PiecewiseControl& x_opp,
                              const TimeGrid& grid,
                              const std::vector<double>& dB, bool& flagged) {
  const MarketParams& mkt = scenario.market;
  const double th_opp = scenario.theta_opp(investor);

  GameState y = flow_full(y_start.pi(investor) - pi_hat[0], y_start, investor, mkt);
  const std::size_t n = grid.n_steps();
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = grid.dt(k);
    const double dS = mkt.vol(y.S) * dB[k] - th_opp * x_opp.values[k] * dt;
    y.S += dS;
    y.W_1 += y.pi_1 * dS;
    y.W_2 += y.pi_2 * dS;
    y.pi_ref(3 - investor) -= x_opp.values[k] * dt;
    if (k + 1 < n) {
      y = flow_full(pi_hat[k] - pi_hat[k + 1], y, investor, mkt);
    }
    for (double* c : {&y.S, &y.pi_1, &y.pi_2, &y.W_1, &y.W_2}) {
      if (!std::isfinite(*c)) throw NonFiniteState(k + 1);
      if (*c > kClampLimit) {
        *c = kClampLimit;
        flagged = true;
      } else if (*c < -kClampLimit) {
        *c = -kClampLimit;
        flagged = true;
      }
    }
  }
  return y.W(investor);
}

}  // namespace

double z_score(const ValueEstimate& a, const ValueEstimate& b) {
  const double diff = a.mean - b.mean;
  const double combined = std::hypot(a.std_error, b.std_error);
  if (combined == 0.0) {
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return diff / combined;
}

ValueEstimate estimate_value(const ValidatedScenario& scenario, int investor,
                             const PiecewiseControl& pi,
                             const PiecewiseControl& x_opp,
                             const BrownianBundle& noise) {
  const TimeGrid& grid = noise.grid();
  require_aux_pair(scenario, pi, x_opp, grid);

  const double delta = scenario.delta(investor);
  MeanAcc acc;
  std::size_t flagged = 0;
  std::vector<double> dB;
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    noise.fill_path(p, dB);
    const AuxTerminal t =
        simulate_aux_terminal(scenario, investor, pi, x_opp, grid, dB);
    if (t.flagged) {
      ++flagged;
      continue;
    }
    acc.add(cara_utility(t.state.w_own, delta));
  }
  return finish(acc, noise.seed(), flagged);
}

double cara_gaussian_value(const ValidatedScenario& scenario, int investor,
                           const PiecewiseControl& pi,
                           const PiecewiseControl& x_opp) {
  if (!scenario.market.vol.is_constant()) {
    throw NonConstantVolatility();
  }
  if (!pi.grid.same_as(x_opp.grid)) {
    throw GridMismatch("cara_gaussian_value: controls on different grids");
  }
  const double sigma = scenario.market.vol.constant_sigma();
  const double th_opp = scenario.theta_opp(investor);
  const double delta = scenario.delta(investor);

  double drift = 0.0;
  double var = 0.0;
  for (std::size_t k = 0; k < pi.grid.n_steps(); ++k) {
    const double dt = pi.grid.dt(k);
    drift += pi.values[k] * x_opp.values[k] * dt;
    var += pi.values[k] * pi.values[k] * dt;
  }
  const double w_mean =
      scenario.market.w0(investor) - th_opp * drift;
  return cara_utility(w_mean - 0.5 * delta * sigma * sigma * var, delta);
}

BruteForceResult brute_force_best(const ValidatedScenario& scenario,
                                  int investor,
                                  const PiecewiseControl& x_opp,
                                  const std::vector<double>& grid_levels,
                                  std::size_t n_intervals,
                                  const BrownianBundle& noise,
                                  const SearchBudget& budget) {
  if (grid_levels.empty() || n_intervals == 0) {
    throw BudgetExceeded("brute_force_best: empty search space");
  }
  std::vector<double> levels = grid_levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (double v : levels) {
    if (v < scenario.bounds.pi_lo || v > scenario.bounds.pi_hi) {
      throw BoundsViolation("brute_force_best: level outside the bounds");
    }
  }

  const TimeGrid coarse =
      TimeGrid::uniform(scenario.market.s, scenario.market.T, n_intervals);
  if (!x_opp.grid.same_as(coarse)) {
    throw GridMismatch("brute_force_best: x_opp must live on the uniform "
                       "grid with n_intervals steps");
  }
  BrownianBundle bundle = noise.grid().same_as(coarse)
                              ? noise
                              : noise.coarsened(coarse);
  bundle.materialize();

  PiecewiseControl trial;
  trial.grid = coarse;
  trial.kind = ControlKind::AuxHolding;
  trial.values.assign(n_intervals, levels[0]);

  std::size_t evaluations = 0;
  auto evaluate = [&](const std::vector<std::size_t>& idx) {
    for (std::size_t k = 0; k < n_intervals; ++k) {
      trial.values[k] = levels[idx[k]];
    }
    ++evaluations;
    return estimate_value(scenario, investor, trial, x_opp, bundle).mean;
  };

  const std::size_t L = levels.size();
  bool fits = true;
  std::size_t total = 1;
  for (std::size_t k = 0; k < n_intervals && fits; ++k) {
    if (total > budget.max_exhaustive / L + 1) {
      fits = false;
      break;
    }
    total *= L;
    if (total > budget.max_exhaustive) fits = false;
  }

  std::vector<std::size_t> best_idx(n_intervals, 0);
  double best_mean = -std::numeric_limits<double>::infinity();

  if (fits) {
    std::vector<std::size_t> idx(n_intervals, 0);
    while (true) {
      const double m = evaluate(idx);
      if (m > best_mean) {
        best_mean = m;
        best_idx = idx;
      }
      // odometer in lexicographic order, last interval fastest
      std::size_t k = n_intervals;
      while (k > 0) {
        --k;
        if (++idx[k] < L) break;
        idx[k] = 0;
        if (k == 0) goto done;
      }
    }
  done:;
  } else {
    if (budget.random_restarts == 0) {
      throw BudgetExceeded("brute_force_best: " + std::to_string(L) + "^" +
                           std::to_string(n_intervals) +
                           " assignments exceed the exhaustive budget and no "
                           "random restarts were allowed");
    }
    std::mt19937_64 eng(budget.seed);
    auto lex_less = [](const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };
    for (std::size_t r = 0; r < budget.random_restarts; ++r) {
      std::vector<std::size_t> idx(n_intervals);
      if (r == 0) {
        std::fill(idx.begin(), idx.end(), L / 2);
      } else {
        for (auto& i : idx) i = static_cast<std::size_t>(eng() % L);
      }
      double cur = evaluate(idx);
      bool improved = true;
      for (int sweep = 0; sweep < 50 && improved; ++sweep) {
        improved = false;
        for (std::size_t k = 0; k < n_intervals; ++k) {
          const std::size_t keep = idx[k];
          std::size_t arg = keep;
          for (std::size_t l = 0; l < L; ++l) {
            if (l == keep) continue;
            idx[k] = l;
            const double m = evaluate(idx);
            if (m > cur) {
              cur = m;
              arg = l;
            }
          }
          idx[k] = arg;
          if (arg != keep) improved = true;
        }
      }
      if (cur > best_mean ||
          (cur == best_mean && lex_less(idx, best_idx))) {
        best_mean = cur;
        best_idx = idx;
      }
    }
  }

  BruteForceResult result;
  result.evaluations = evaluations;
  result.exhaustive = fits;
  result.best.grid = coarse;
  result.best.kind = ControlKind::AuxHolding;
  result.best.values.resize(n_intervals);
  for (std::size_t k = 0; k < n_intervals; ++k) {
    result.best.values[k] = levels[best_idx[k]];
  }
  result.value = estimate_value(scenario, investor, result.best, x_opp, bundle);
  return result;
}

DominanceReport dominance_check(const ValidatedScenario& scenario,
                                int investor,
                                const PiecewiseControl& candidate,
                                const PiecewiseControl& x_opp_candidate,
                                const std::vector<PiecewiseControl>& challengers,
                                const PiecewiseControl& x_opp_challenger,
                                const BrownianBundle& noise) {
  DominanceReport report;

  if (candidate.grid.same_as(noise.grid())) {
    report.candidate =
        estimate_value(scenario, investor, candidate, x_opp_candidate, noise);
  } else {
    BrownianBundle b = noise.coarsened(candidate.grid);
    report.candidate =
        estimate_value(scenario, investor, candidate, x_opp_candidate, b);
  }

  BrownianBundle coarse = x_opp_challenger.grid.same_as(noise.grid())
                              ? noise
                              : noise.coarsened(x_opp_challenger.grid);
  coarse.materialize();

  report.margin = std::numeric_limits<double>::infinity();
  report.challengers.reserve(challengers.size());
  char id[32];
  for (std::size_t i = 0; i < challengers.size(); ++i) {
    const ValueEstimate est = estimate_value(scenario, investor, challengers[i],
                                             x_opp_challenger, coarse);
    std::snprintf(id, sizeof(id), "challenger-%04zu", i);
    report.challengers.emplace_back(id, est);
    report.margin = std::min(report.margin, z_score(report.candidate, est));
  }
  report.verdict = report.margin > -3.0;
  return report;
}

std::vector<PiecewiseControl> random_level_controls(
    const std::vector<double>& grid_levels, const TimeGrid& grid,
    std::size_t count, std::uint64_t seed) {
  if (grid_levels.empty()) {
    throw BudgetExceeded("random_level_controls: no levels");
  }
  std::mt19937_64 eng(seed);
  std::vector<PiecewiseControl> out(count);
  for (auto& c : out) {
    c.grid = grid;
    c.kind = ControlKind::AuxHolding;
    c.values.resize(grid.n_steps());
    for (auto& v : c.values) {
      v = grid_levels[static_cast<std::size_t>(eng() % grid_levels.size())];
    }
  }
  return out;
}

InvarianceResult invariance_check(const ValidatedScenario& scenario,
                                  int investor, const GameState& y, double q,
                                  const PiecewiseControl& x_opp,
                                  const BrownianBundle& noise) {
  const TimeGrid& grid = noise.grid();
  if (!x_opp.grid.same_as(grid)) {
    throw GridMismatch("invariance_check: x_opp must live on the noise grid");
  }
  const BestResponse br = best_response_path(scenario, investor, x_opp);
  const std::vector<double>& pi_hat = br.pi_path.values;

  const GameState y_flow = flow_full(q, y, investor, scenario.market);
  const double delta = scenario.delta(investor);

  MeanAcc acc_a, acc_b;
  std::size_t flagged = 0;
  std::vector<double> dB;
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    noise.fill_path(p, dB);
    bool flag_a = false, flag_b = false;
    const double w_a = jump_strategy_terminal(scenario, investor, y, pi_hat,
                                              x_opp, grid, dB, flag_a);
    const double w_b = jump_strategy_terminal(scenario, investor, y_flow,
                                              pi_hat, x_opp, grid, dB, flag_b);
    if (flag_a || flag_b) {
      ++flagged;
      continue;
    }
    acc_a.add(cara_utility(w_a, delta));
    acc_b.add(cara_utility(w_b, delta));
  }

  InvarianceResult r;
  r.at_state = finish(acc_a, noise.seed(), flagged);
  r.at_flow = finish(acc_b, noise.seed(), flagged);
  r.z = z_score(r.at_state, r.at_flow);
  return r;
}

EquivalenceResult equivalence_check(const ValidatedScenario& scenario,
                                    int investor,
                                    const PiecewiseControl& pi_candidate,
                                    const PiecewiseControl& x_opp,
                                    const BrownianBundle& noise) {
  const TimeGrid& grid = noise.grid();
  require_aux_pair(scenario, pi_candidate, x_opp, grid);

  const MarketParams& mkt = scenario.market;
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);
  const double delta = scenario.delta(investor);
  const double pi_s = mkt.pi0(investor);
  const std::size_t n = grid.n_steps();

  // Rate realization of the holdings candidate: exact jump at s if the
  // first holding differs from the initial position, finite differences
  // in between, flat over the final interval.
  std::vector<double> rate(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    rate[k] = -(pi_candidate.values[k + 1] - pi_candidate.values[k]) / grid.dt(k);
  }

  const GameState y0{mkt.s0, mkt.pi1_0, mkt.pi2_0, mkt.w1_0, mkt.w2_0};
  const GameState y_start =
      (pi_candidate.values[0] == pi_s)
          ? y0
          : flow_full(pi_s - pi_candidate.values[0], y0, investor, mkt);

  MeanAcc acc_game;
  std::size_t flagged_game = 0;
  std::vector<double> dB;
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    noise.fill_path(p, dB);
    GameState y = y_start;
    bool flagged = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double dt = grid.dt(k);
      const double x_own = rate[k];
      const double x_o = x_opp.values[k];
      const double dS = mkt.vol(y.S) * dB[k] -
                        (th_own * x_own + th_opp * x_o) * dt;
      y.W_1 += y.pi_1 * dS;
      y.W_2 += y.pi_2 * dS;
      y.S += dS;
      y.pi_ref(investor) -= x_own * dt;
      y.pi_ref(3 - investor) -= x_o * dt;
      for (double* c : {&y.S, &y.pi_1, &y.pi_2, &y.W_1, &y.W_2}) {
        if (!std::isfinite(*c)) throw NonFiniteState(k + 1);
        if (std::abs(*c) > kClampLimit) {
          *c = std::copysign(kClampLimit, *c);
          flagged = true;
        }
      }
    }
    if (flagged) {
      ++flagged_game;
      continue;
    }
    const double pi_T = y.pi(investor);
    const double w_quot =
        y.W(investor) - 0.5 * th_own * (pi_T * pi_T - pi_s * pi_s);
    acc_game.add(cara_utility(w_quot, delta));
  }

  EquivalenceResult r;
  r.game_side = finish(acc_game, noise.seed(), flagged_game);
  r.aux_side = estimate_value(scenario, investor, pi_candidate, x_opp, noise);
  r.z = z_score(r.game_side, r.aux_side);
  return r;
}

ConcavityReport concavity_check(const ValidatedScenario& scenario,
                                int investor, const PiecewiseControl& pi_a,
                                const PiecewiseControl& pi_b, double xi,
                                const PiecewiseControl& x_opp,
                                const BrownianBundle& noise) {
  if (!(xi > 0.0 && xi < 1.0)) {
    throw std::invalid_argument("concavity_check: xi must be in (0,1)");
  }
  if (!pi_a.grid.same_as(pi_b.grid)) {
    throw GridMismatch("concavity_check: controls on different grids");
  }

  PiecewiseControl mid;
  mid.grid = pi_a.grid;
  mid.kind = ControlKind::AuxHolding;
  mid.values.resize(pi_a.values.size());
  std::size_t n_differ = 0;
  for (std::size_t k = 0; k < mid.values.size(); ++k) {
    mid.values[k] = xi * pi_a.values[k] + (1.0 - xi) * pi_b.values[k];
    if (pi_a.values[k] != pi_b.values[k]) ++n_differ;
  }

  ConcavityReport rep;
  rep.at_a = estimate_value(scenario, investor, pi_a, x_opp, noise);
  rep.at_b = estimate_value(scenario, investor, pi_b, x_opp, noise);
  rep.mid = estimate_value(scenario, investor, mid, x_opp, noise);
  rep.slack = rep.mid.mean - (xi * rep.at_a.mean + (1.0 - xi) * rep.at_b.mean);
  rep.se = std::sqrt(rep.mid.std_error * rep.mid.std_error +
                     xi * xi * rep.at_a.std_error * rep.at_a.std_error +
                     (1.0 - xi) * (1.0 - xi) * rep.at_b.std_error *
                         rep.at_b.std_error);
  rep.degenerate = (n_differ == 0);
  rep.strict_applicable =
      !rep.degenerate &&
      (10 * n_differ >= mid.values.size());
  if (rep.degenerate) {
    rep.pass = true;
  } else {
    rep.pass = rep.slack >= -3.0 * rep.se &&
               (!rep.strict_applicable || rep.slack > 0.0);
  }
  return rep;
}

std::string fnv1a_hex(const std::string& payload) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace impactgame
