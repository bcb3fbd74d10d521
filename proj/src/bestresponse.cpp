#include "impactgame/bestresponse.hpp"

#include <cmath>
#include <limits>

namespace impactgame {

namespace {

double clamp_to_bounds(double v, const ControlBounds& b) {
  return std::max(b.pi_lo, std::min(v, b.pi_hi));
}

// Unclamped first-order target at a trial holding.
double raw_target(double x_opp, double P, double pi,
                  const ValidatedScenario& scenario, int investor) {
  if (x_opp == 0.0) return 0.0;
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);
  const double sig = scenario.market.vol(P + th_own * pi);
  const double sig2 = sig * sig;
  if (sig2 == 0.0) {
    return (x_opp > 0.0) ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  }
  return -th_opp * x_opp / (scenario.delta(investor) * sig2);
}

double solve_pointwise(double x_opp, double P,
                       const ValidatedScenario& scenario, int investor) {
  const ControlBounds& b = scenario.bounds;
  if (scenario.market.vol.is_constant() || x_opp == 0.0) {
    return clamp_to_bounds(raw_target(x_opp, P, 0.0, scenario, investor), b);
  }

  // sigma's argument depends on the holding itself; solve the fixed point
  // pi = clamp(target(pi)) by damped iteration.
  const double lambda = 0.5;
  const double tol = 1e-10;
  const std::size_t max_iters = 200;
  double pi = clamp_to_bounds(0.0, b);
  for (std::size_t it = 0; it < max_iters; ++it) {
    const double mapped =
        clamp_to_bounds(raw_target(x_opp, P, pi, scenario, investor), b);
    const double next = (1.0 - lambda) * pi + lambda * mapped;
    if (std::abs(next - pi) < tol) return next;
    pi = next;
  }

  // g(pi) = pi - clamp(target(pi)) has g(pi_lo) <= 0 <= g(pi_hi), so the
  // bounds always bracket a root of this continuous map.
  double lo = b.pi_lo, hi = b.pi_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g =
        mid - clamp_to_bounds(raw_target(x_opp, P, mid, scenario, investor), b);
    if (g <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  pi = 0.5 * (lo + hi);
  const double residual =
      std::abs(pi - clamp_to_bounds(raw_target(x_opp, P, pi, scenario, investor), b));
  if (!(residual < 1e-8)) {
    throw FixedPointDivergence(max_iters + 200, residual);
  }
  return pi;
}

}  // namespace

std::string region_name(RegionLabel label) {
  switch (label) {
    case RegionLabel::ContinuationUpper:
      return "ContinuationUpper";
    case RegionLabel::ContinuationLower:
      return "ContinuationLower";
    case RegionLabel::Control:
      return "Control";
  }
  return "Unknown";
}

double optimal_aux_pointwise(double x_opp, double P,
                             const ValidatedScenario& scenario, int investor) {
  return solve_pointwise(x_opp, P, scenario, investor);
}

RegionLabel classify_region(double x_opp, double P,
                            const ValidatedScenario& scenario, int investor) {
  const double pi = solve_pointwise(x_opp, P, scenario, investor);
  const double target = raw_target(x_opp, P, pi, scenario, investor);
  if (target >= scenario.bounds.pi_hi) return RegionLabel::ContinuationUpper;
  if (target <= scenario.bounds.pi_lo) return RegionLabel::ContinuationLower;
  return RegionLabel::Control;
}

BestResponse best_response_path(const ValidatedScenario& scenario,
                                int investor, const PiecewiseControl& x_opp,
                                std::function<double(double)> price_proxy) {
  x_opp.check_shape();
  if (x_opp.kind != ControlKind::TradingRate) {
    throw std::invalid_argument("best_response_path: x_opp must be a rate");
  }
  if (!scenario.market.vol.is_constant() && !price_proxy) {
    throw NonConstantVolatility();
  }

  const TimeGrid& grid = x_opp.grid;
  const std::size_t n = grid.n_steps();

  BestResponse out;
  out.pi_path.grid = grid;
  out.pi_path.kind = ControlKind::AuxHolding;
  out.pi_path.values.resize(n);
  out.rate_path.grid = grid;
  out.rate_path.kind = ControlKind::TradingRate;
  out.rate_path.values.resize(n);
  out.regions.resize(n);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.nodes[k];
    const double P = price_proxy ? price_proxy(t) : scenario.market.s0;
    out.pi_path.values[k] = solve_pointwise(x_opp.values[k], P, scenario, investor);
    out.regions[k] = classify_region(x_opp.values[k], P, scenario, investor);
  }

  for (std::size_t k = 0; k + 1 < n; ++k) {
    out.rate_path.values[k] =
        -(out.pi_path.values[k + 1] - out.pi_path.values[k]) / grid.dt(k);
  }
  if (n >= 2) {
    out.rate_path.values[n - 1] =
        -(out.pi_path.values[n - 1] - out.pi_path.values[n - 2]) / grid.dt(n - 2);
  } else {
    out.rate_path.values[0] = 0.0;
  }

  out.initial_jump = out.pi_path.values.empty() ? 0.0 : out.pi_path.values[0];

  for (std::size_t k = 0; k < n; ++k) {
    if (out.regions[k] != RegionLabel::Control) {
      out.regularity_warning = true;
      out.warning_reason =
          "holding path touches the bounds at t = " +
          std::to_string(grid.nodes[k]) +
          "; the implied rate need not stay integrable there";
      break;
    }
  }
  return out;
}

}  // namespace impactgame
