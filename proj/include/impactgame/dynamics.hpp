#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "impactgame/model.hpp"

namespace impactgame {

class GridMismatch : public std::runtime_error {
 public:
  explicit GridMismatch(const std::string& what) : std::runtime_error(what) {}
};

class BoundsViolation : public std::runtime_error {
 public:
  explicit BoundsViolation(const std::string& what) : std::runtime_error(what) {}
};

class NonFiniteState : public std::runtime_error {
 public:
  explicit NonFiniteState(std::size_t step)
      : std::runtime_error("non-finite state at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Seeded Gaussian increments on a grid. Path p's stream depends only on
// (seed, p), never on how many paths were drawn before it, so results are
// reproducible under any evaluation order. A bundle derived by coarsened()
// sums the same master increments between subgrid nodes, which keeps
// common-random-number comparisons exact across grid resolutions.
class BrownianBundle {
 public:
  static BrownianBundle create(const TimeGrid& grid, std::uint64_t seed,
                               std::size_t n_paths);

  // coarse.nodes must be a subset of this bundle's master grid nodes.
  BrownianBundle coarsened(const TimeGrid& coarse) const;

  // Fills out[0..n_steps) with the increments of path p on this bundle's grid.
  void fill_path(std::size_t p, std::vector<double>& out) const;

  // Precomputes and stores every path (worthwhile when the same bundle is
  // replayed across many control candidates).
  void materialize();

  const TimeGrid& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t n_paths() const { return n_paths_; }

 private:
  BrownianBundle() = default;
  void fill_master(std::size_t p, std::vector<double>& out) const;

  TimeGrid grid_;         // the grid increments are delivered on
  TimeGrid master_grid_;  // the grid increments are generated on
  std::vector<std::size_t> agg_bounds_;  // master indices of grid_ nodes
  std::uint64_t seed_ = 0;
  std::size_t n_paths_ = 0;
  std::vector<double> cache_;  // n_paths * grid_.n_steps() when materialized
  bool materialized_ = false;
};

struct StatePath {
  TimeGrid grid;
  std::vector<GameState> states;  // n_steps + 1
  PiecewiseControl x1, x2;
  std::vector<double> dB;  // increments used, n_steps
  bool flagged = false;    // some coordinate exceeded the clamp threshold
};

struct AuxPath {
  TimeGrid grid;
  std::vector<AuxState> states;  // n_steps + 1
  PiecewiseControl pi_own, x_opp;
  std::vector<double> dB;
  int investor = 1;
  bool flagged = false;
};

struct CoefficientBundle {
  std::array<double, 5> a, b, v;
  std::array<double, 4> beta, nu;
};

struct SimDiagnostics {
  std::size_t flagged_paths = 0;
  double max_state_norm = 0.0;
};

// Drift/diffusion vectors of the game SDE for investor i in the fixed
// layout (S, pi_1, pi_2, W_1, W_2), plus the auxiliary beta/nu evaluated at
// the same state (own control value = the state's own holding).
CoefficientBundle coefficients(const GameState& state, int investor,
                               const ValidatedScenario& scenario);

// Explicit Euler on the noise grid. Controls must live on that grid.
// Coordinates beyond 1e12 in magnitude are clamped and the path flagged.
StatePath simulate_game_path(const ValidatedScenario& scenario,
                             const PiecewiseControl& x1,
                             const PiecewiseControl& x2,
                             const BrownianBundle& noise, std::size_t path);

std::vector<StatePath> simulate_game(const ValidatedScenario& scenario,
                                     const PiecewiseControl& x1,
                                     const PiecewiseControl& x2,
                                     const BrownianBundle& noise);

// Streams every path through fn (the StatePath buffer is reused between
// calls); returns flag counts and the largest state norm seen.
SimDiagnostics for_each_game_path(
    const ValidatedScenario& scenario, const PiecewiseControl& x1,
    const PiecewiseControl& x2, const BrownianBundle& noise,
    const std::function<void(std::size_t, const StatePath&)>& fn);

// Auxiliary dynamics for one investor: own control is a holdings path
// (AuxHolding, bounded), opponent control is a rate. Z_s = Y_s with the own
// holding dropped.
AuxPath simulate_aux_path(const ValidatedScenario& scenario, int investor,
                          const PiecewiseControl& pi_own,
                          const PiecewiseControl& x_opp,
                          const BrownianBundle& noise, std::size_t path);

std::vector<AuxPath> simulate_aux(const ValidatedScenario& scenario,
                                  int investor,
                                  const PiecewiseControl& pi_own,
                                  const PiecewiseControl& x_opp,
                                  const BrownianBundle& noise);

// Lean inner loop for Monte Carlo estimation: advances the auxiliary state
// to T given precomputed increments; returns the terminal state and whether
// the path was clamp-flagged.
struct AuxTerminal {
  AuxState state;
  bool flagged = false;
};
AuxTerminal simulate_aux_terminal(const ValidatedScenario& scenario,
                                  int investor,
                                  const PiecewiseControl& pi_own,
                                  const PiecewiseControl& x_opp,
                                  const TimeGrid& grid,
                                  const std::vector<double>& dB);

// Max over nodes of |W_t - (W_s + (theta_i/2)(pi_t^2 - pi_s^2)
//   - theta_opp * sum pi x_opp dt + sum pi sigma(S) dB)|,
// all sums taken with the same left-node discretization the simulator used.
double wealth_identity_residual(const StatePath& path, int investor,
                                const ValidatedScenario& scenario);

// Own rate q/eps on [s, s+eps], opponent zero; returns the state at s+eps.
// Wealth increments use midpoint holdings so the sigma = 0 case reproduces
// the closed-form flow exactly at any eps.
GameState blip_transport(const ValidatedScenario& scenario, int investor,
                         double q, double eps, const BrownianBundle& noise,
                         std::size_t path = 0);

}  // namespace impactgame
