#pragma once

#include <functional>
#include <string>

#include "impactgame/model.hpp"

namespace impactgame {

class FixedPointDivergence : public std::runtime_error {
 public:
  FixedPointDivergence(std::size_t iterations, double residual)
      : std::runtime_error("pointwise optimizer failed to converge after " +
                           std::to_string(iterations) +
                           " iterations (residual " + std::to_string(residual) +
                           ")"),
        iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

enum class RegionLabel { ContinuationUpper, ContinuationLower, Control };

std::string region_name(RegionLabel label);

struct BestResponse {
  PiecewiseControl pi_path;    // AuxHolding, clamped to the bounds
  PiecewiseControl rate_path;  // TradingRate, minus the forward difference
  double initial_jump = 0.0;   // holding at s (position before s is flat)
  bool regularity_warning = false;
  std::string warning_reason;
  std::vector<RegionLabel> regions;  // one per interval
};

// Holding that maximizes the pointwise auxiliary objective:
// clamp(-theta_opp * x_opp / (delta_own * sigma(P + theta_own * pi)^2)).
// Explicit for constant sigma; damped fixed-point iteration (bisection
// fallback) otherwise.
double optimal_aux_pointwise(double x_opp, double P,
                             const ValidatedScenario& scenario, int investor);

// ContinuationUpper iff the unclamped target (sigma evaluated at the solved
// holding) is >= the upper bound, ContinuationLower iff <= the lower bound,
// Control otherwise.
RegionLabel classify_region(double x_opp, double P,
                            const ValidatedScenario& scenario, int investor);

// Pointwise best response along the opponent's rate schedule. Non-constant
// volatility requires a deterministic price proxy t -> P (with none given,
// the scenario must have constant volatility).
BestResponse best_response_path(const ValidatedScenario& scenario,
                                int investor, const PiecewiseControl& x_opp,
                                std::function<double(double)> price_proxy = {});

}  // namespace impactgame
