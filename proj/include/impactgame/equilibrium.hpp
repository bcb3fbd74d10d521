#pragma once

#include <array>
#include <optional>

#include "impactgame/model.hpp"

namespace impactgame {

struct CouplingConstants {
  double chi = 0.0;     // sqrt(delta1*delta2/(theta1*theta2)) * sigma^2
  double varphi = 0.0;  // sqrt(delta1*theta1/(delta2*theta2))
};

struct ConditionsReport {
  bool cond_i = false;    // varphi != 1
  bool cond_ii = false;   // some initial holding nonzero
  bool cond_iii = false;  // growth bound fits inside the holding bounds
  double varphi = 0.0;
  double max_abs_pi0 = 0.0;
  double lhs_iii = 0.0;  // exp(chi*T) * ((1+phi)|pi1_0| + (1+1/phi)|pi2_0|)
  double rhs_iii = 0.0;  // min(|pi_lo|, |pi_hi|)
  bool all() const { return cond_i && cond_ii && cond_iii; }
};

class ConditionsFailed : public std::runtime_error {
 public:
  explicit ConditionsFailed(ConditionsReport report)
      : std::runtime_error("equilibrium conditions not satisfied"),
        report_(report) {}
  const ConditionsReport& report() const { return report_; }

 private:
  ConditionsReport report_;
};

// Deterministic equilibrium holdings and rates. Trajectories are evaluated
// in elapsed time tau = t - s:
//   pi1(t) = pi1_0 cosh(chi tau) + (pi2_0 / phi) sinh(chi tau)
//   pi2(t) = phi pi1_0 sinh(chi tau) + pi2_0 cosh(chi tau)
//   x1(t) = -(chi/phi) pi2(t),  x2(t) = -chi phi pi1(t)
class EquilibriumSolution {
 public:
  EquilibriumSolution(CouplingConstants constants, double s, double T,
                      double pi1_0, double pi2_0, ConditionsReport report);

  double pi1(double t) const;
  double pi2(double t) const;
  double pi(int investor, double t) const;
  double x1(double t) const;
  double x2(double t) const;
  double x(int investor, double t) const;

  // Jump taken at time s from a flat pre-game position.
  double initial_jump(int investor) const;

  const CouplingConstants& constants() const { return constants_; }
  double start() const { return s_; }
  double horizon() const { return T_; }
  const ConditionsReport& conditions() const { return report_; }
  const std::array<std::optional<double>, 2>& crossing_times() const {
    return crossings_;
  }

 private:
  CouplingConstants constants_;
  double s_, T_;
  double pi1_0_, pi2_0_;
  ConditionsReport report_;
  std::array<std::optional<double>, 2> crossings_;
};

CouplingConstants coupling_constants(const ValidatedScenario& scenario);

ConditionsReport check_conditions(const ValidatedScenario& scenario);

// Throws ConditionsFailed (with the report attached) unless all of
// (i) varphi != 1, (ii) some nonzero initial holding, (iii) the growth
// bound fits inside the holding bounds.
EquilibriumSolution nash_equilibrium(const ValidatedScenario& scenario);

// Zero of the investor's holding trajectory in [s, T], if one exists.
std::optional<double> crossing_time(const EquilibriumSolution& sol,
                                    int investor);

// Residual of the coupled linear ODE the closed form satisfies,
// (d pi1/dt - (chi/phi) pi2, d pi2/dt - chi phi pi1), with analytic
// derivatives; near zero up to rounding.
std::array<double, 2> ode_residual(const EquilibriumSolution& sol, double t);

// Same residual with centered finite differences of width h; O(h^2).
std::array<double, 2> ode_residual_fd(const EquilibriumSolution& sol, double t,
                                      double h);

struct TradingVolume {
  double total = 0.0;
  std::array<double, 2> per_investor{0.0, 0.0};
};

// Initial jump magnitudes plus the trapezoid integral of |rates| on the
// grid. The price-taking benchmark trades nothing, so this is also the
// excess volume.
TradingVolume trading_volume(const EquilibriumSolution& sol,
                             const TimeGrid& grid);

// Numerical integration of the coupled holding ODE, usable when varphi = 1
// where no closed form is offered. Classic fourth-order Runge-Kutta on the
// grid; clearly not the closed-form solution.
struct OdeTrajectory {
  TimeGrid grid;
  std::vector<double> pi1, pi2;
};
OdeTrajectory integrate_equilibrium_ode(const ValidatedScenario& scenario,
                                        const TimeGrid& grid);

}  // namespace impactgame
