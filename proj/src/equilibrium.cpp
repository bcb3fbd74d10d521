#include "impactgame/equilibrium.hpp"

#include <cmath>

namespace impactgame {

namespace {

// Zero of A cosh(chi tau) + B sinh(chi tau) on [0, span], refined by Newton.
std::optional<double> hyperbolic_root(double A, double B, double chi,
                                      double span) {
  double tau;
  if (B == 0.0) {
    if (A != 0.0) return std::nullopt;
    tau = 0.0;  // identically zero trajectory; report the boundary
  } else {
    const double r = -A / B;
    if (!(std::abs(r) < 1.0)) return std::nullopt;
    tau = std::atanh(r) / chi;
  }
  if (tau < 0.0 || tau > span) return std::nullopt;
  for (int it = 0; it < 3; ++it) {
    const double f = A * std::cosh(chi * tau) + B * std::sinh(chi * tau);
    const double df = chi * (A * std::sinh(chi * tau) + B * std::cosh(chi * tau));
    if (df == 0.0) break;
    const double next = tau - f / df;
    if (next < 0.0 || next > span) break;
    tau = next;
  }
  return tau;
}

}  // namespace

EquilibriumSolution::EquilibriumSolution(CouplingConstants constants, double s,
                                         double T, double pi1_0, double pi2_0,
                                         ConditionsReport report)
    : constants_(constants),
      s_(s),
      T_(T),
      pi1_0_(pi1_0),
      pi2_0_(pi2_0),
      report_(report) {
  const double span = T_ - s_;
  const double phi = constants_.varphi;
  auto shift = [&](std::optional<double> tau) -> std::optional<double> {
    if (!tau) return std::nullopt;
    return s_ + *tau;
  };
  crossings_[0] = shift(hyperbolic_root(pi1_0_, pi2_0_ / phi, constants_.chi, span));
  crossings_[1] = shift(hyperbolic_root(pi2_0_, phi * pi1_0_, constants_.chi, span));
}

double EquilibriumSolution::pi1(double t) const {
  const double tau = t - s_;
  return pi1_0_ * std::cosh(constants_.chi * tau) +
         (pi2_0_ / constants_.varphi) * std::sinh(constants_.chi * tau);
}

double EquilibriumSolution::pi2(double t) const {
  const double tau = t - s_;
  return constants_.varphi * pi1_0_ * std::sinh(constants_.chi * tau) +
         pi2_0_ * std::cosh(constants_.chi * tau);
}

double EquilibriumSolution::pi(int investor, double t) const {
  return (investor == 1) ? pi1(t) : pi2(t);
}

double EquilibriumSolution::x1(double t) const {
  return -(constants_.chi / constants_.varphi) * pi2(t);
}

double EquilibriumSolution::x2(double t) const {
  return -constants_.chi * constants_.varphi * pi1(t);
}

double EquilibriumSolution::x(int investor, double t) const {
  return (investor == 1) ? x1(t) : x2(t);
}

double EquilibriumSolution::initial_jump(int investor) const {
  return (investor == 1) ? pi1_0_ : pi2_0_;
}

CouplingConstants coupling_constants(const ValidatedScenario& scenario) {
  if (!scenario.market.vol.is_constant()) {
    throw NonConstantVolatility();
  }
  const double sigma = scenario.market.vol.constant_sigma();
  const Preferences& p = scenario.prefs;
  const MarketParams& m = scenario.market;
  CouplingConstants c;
  c.chi = std::sqrt(p.delta_1 * p.delta_2 / (m.theta_1 * m.theta_2)) * sigma * sigma;
  c.varphi = std::sqrt(p.delta_1 * m.theta_1 / (p.delta_2 * m.theta_2));
  return c;
}

ConditionsReport check_conditions(const ValidatedScenario& scenario) {
  const CouplingConstants c = coupling_constants(scenario);
  const MarketParams& m = scenario.market;
  ConditionsReport r;
  r.varphi = c.varphi;
  r.cond_i = (c.varphi != 1.0);
  r.max_abs_pi0 = std::max(std::abs(m.pi1_0), std::abs(m.pi2_0));
  r.cond_ii = (r.max_abs_pi0 != 0.0);
  r.lhs_iii = std::exp(c.chi * m.T) *
              ((1.0 + c.varphi) * std::abs(m.pi1_0) +
               (1.0 + 1.0 / c.varphi) * std::abs(m.pi2_0));
  r.rhs_iii = std::min(std::abs(scenario.bounds.pi_lo),
                       std::abs(scenario.bounds.pi_hi));
  r.cond_iii = (r.lhs_iii <= r.rhs_iii);
  return r;
}

EquilibriumSolution nash_equilibrium(const ValidatedScenario& scenario) {
  const ConditionsReport report = check_conditions(scenario);
  if (!report.all()) {
    throw ConditionsFailed(report);
  }
  const MarketParams& m = scenario.market;
  return EquilibriumSolution(coupling_constants(scenario), m.s, m.T, m.pi1_0,
                             m.pi2_0, report);
}

std::optional<double> crossing_time(const EquilibriumSolution& sol,
                                    int investor) {
  return sol.crossing_times()[static_cast<std::size_t>(investor - 1)];
}

std::array<double, 2> ode_residual(const EquilibriumSolution& sol, double t) {
  const double chi = sol.constants().chi;
  const double phi = sol.constants().varphi;
  const double tau = t - sol.start();
  const double ch = std::cosh(chi * tau);
  const double sh = std::sinh(chi * tau);
  const double pi1_0 = sol.pi1(sol.start());
  const double pi2_0 = sol.pi2(sol.start());
  const double dpi1 = chi * (pi1_0 * sh + (pi2_0 / phi) * ch);
  const double dpi2 = chi * (phi * pi1_0 * ch + pi2_0 * sh);
  return {dpi1 - (chi / phi) * sol.pi2(t), dpi2 - chi * phi * sol.pi1(t)};
}

std::array<double, 2> ode_residual_fd(const EquilibriumSolution& sol, double t,
                                      double h) {
  const double chi = sol.constants().chi;
  const double phi = sol.constants().varphi;
  const double dpi1 = (sol.pi1(t + h) - sol.pi1(t - h)) / (2.0 * h);
  const double dpi2 = (sol.pi2(t + h) - sol.pi2(t - h)) / (2.0 * h);
  return {dpi1 - (chi / phi) * sol.pi2(t), dpi2 - chi * phi * sol.pi1(t)};
}

TradingVolume trading_volume(const EquilibriumSolution& sol,
                             const TimeGrid& grid) {
  TradingVolume v;
  for (int i = 1; i <= 2; ++i) {
    double vol = std::abs(sol.initial_jump(i));
    for (std::size_t k = 0; k < grid.n_steps(); ++k) {
      vol += 0.5 * (std::abs(sol.x(i, grid.nodes[k])) +
                    std::abs(sol.x(i, grid.nodes[k + 1]))) * grid.dt(k);
    }
    v.per_investor[static_cast<std::size_t>(i - 1)] = vol;
    v.total += vol;
  }
  return v;
}

OdeTrajectory integrate_equilibrium_ode(const ValidatedScenario& scenario,
                                        const TimeGrid& grid) {
  const CouplingConstants c = coupling_constants(scenario);
  const double r1 = c.chi / c.varphi;  // d pi1/dt = r1 * pi2
  const double r2 = c.chi * c.varphi;  // d pi2/dt = r2 * pi1

  OdeTrajectory out;
  out.grid = grid;
  out.pi1.resize(grid.nodes.size());
  out.pi2.resize(grid.nodes.size());
  out.pi1[0] = scenario.market.pi1_0;
  out.pi2[0] = scenario.market.pi2_0;

  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double h = grid.dt(k);
    const double p1 = out.pi1[k], p2 = out.pi2[k];
    const double k1a = r1 * p2, k1b = r2 * p1;
    const double k2a = r1 * (p2 + 0.5 * h * k1b), k2b = r2 * (p1 + 0.5 * h * k1a);
    const double k3a = r1 * (p2 + 0.5 * h * k2b), k3b = r2 * (p1 + 0.5 * h * k2a);
    const double k4a = r1 * (p2 + h * k3b), k4b = r2 * (p1 + h * k3a);
    out.pi1[k + 1] = p1 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    out.pi2[k + 1] = p2 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
  }
  return out;
}

}  // namespace impactgame
