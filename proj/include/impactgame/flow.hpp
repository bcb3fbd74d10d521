#pragma once

#include <array>

#include "impactgame/model.hpp"

namespace impactgame {

using Matrix5 = std::array<std::array<double, 5>, 5>;

// Closed-form integral flow of d(phi)/dq = b_i(phi):
// (S - theta_i q, pi_i - q, pi_opp, W_i - theta_i (pi_i q - q^2/2),
//  W_opp - theta_i pi_opp q), placed per investor index.
GameState flow_full(double q, const GameState& y, int investor,
                    const MarketParams& mkt);

// Four-dimensional transform of the abridged/auxiliary state. The own
// holding entering the wealth coordinate is not part of AuxState and is
// supplied explicitly as pi_own.
AuxState flow_abridged(double q, const AuxState& z, double pi_own,
                       int investor, const MarketParams& mkt);

// Exact Jacobian of y -> flow_full(q, y): I + q*B with B the constant
// Jacobian of b_i (nilpotent, B^2 = 0). Rows/columns ordered
// (S, pi_1, pi_2, W_1, W_2).
Matrix5 flow_jacobian(double q, int investor, const MarketParams& mkt);

// Independent check: classical fourth-order fixed-step integration of the
// flow ODE from 0 to q.
GameState flow_ode_oracle(double q, const GameState& y, int investor,
                          const MarketParams& mkt, std::size_t n_steps);

// P = S - theta_i pi_i, w_own = W_i - (theta_i/2) pi_i^2,
// w_opp = W_opp - theta_i pi_opp pi_i.
AuxState aux_coords(const GameState& y, int investor, const MarketParams& mkt);

}  // namespace impactgame
