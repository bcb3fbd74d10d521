#include "impactgame/dynamics.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace impactgame {

namespace {

constexpr double kClampLimit = 1e12;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (path + 1));
}

// One standard normal per pair of engine draws (Box-Muller, cosine branch).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    double u1 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

// Clamps a coordinate into [-kClampLimit, kClampLimit]; reports whether it
// was out of range. NaN propagates untouched (caught by the finite check).
bool clamp_coord(double& c) {
  if (c > kClampLimit) {
    c = kClampLimit;
    return true;
  }
  if (c < -kClampLimit) {
    c = -kClampLimit;
    return true;
  }
  return false;
}

void require_rate_control(const PiecewiseControl& x, const TimeGrid& grid,
                          const char* name) {
  x.check_shape();
  if (x.kind != ControlKind::TradingRate) {
    throw GridMismatch(std::string(name) + ": expected a trading-rate control");
  }
  if (!x.grid.same_as(grid)) {
    throw GridMismatch(std::string(name) +
                       ": control grid differs from the simulation grid");
  }
}

}  // namespace

BrownianBundle BrownianBundle::create(const TimeGrid& grid, std::uint64_t seed,
                                      std::size_t n_paths) {
  if (grid.n_steps() == 0) {
    throw GridMismatch("BrownianBundle: grid has no steps");
  }
  BrownianBundle b;
  b.grid_ = grid;
  b.master_grid_ = grid;
  b.seed_ = seed;
  b.n_paths_ = n_paths;
  return b;
}

BrownianBundle BrownianBundle::coarsened(const TimeGrid& coarse) const {
  std::vector<std::size_t> bounds;
  bounds.reserve(coarse.nodes.size());
  std::size_t j = 0;
  for (double t : coarse.nodes) {
    while (j < master_grid_.nodes.size() &&
           master_grid_.nodes[j] < t - 1e-12) {
      ++j;
    }
    if (j >= master_grid_.nodes.size() ||
        std::abs(master_grid_.nodes[j] - t) > 1e-12) {
      throw GridMismatch("coarsened: node " + std::to_string(t) +
                         " is not a node of the master grid");
    }
    bounds.push_back(j);
  }
  BrownianBundle b;
  b.grid_ = coarse;
  b.master_grid_ = master_grid_;
  b.agg_bounds_ = std::move(bounds);
  b.seed_ = seed_;
  b.n_paths_ = n_paths_;
  return b;
}

void BrownianBundle::fill_master(std::size_t p, std::vector<double>& out) const {
  const std::size_t n = master_grid_.n_steps();
  out.resize(n);
  NormalStream normals(path_seed(seed_, p));
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::sqrt(master_grid_.dt(k)) * normals.next();
  }
}

void BrownianBundle::fill_path(std::size_t p, std::vector<double>& out) const {
  const std::size_t n = grid_.n_steps();
  if (p >= n_paths_) {
    throw GridMismatch("fill_path: path index out of range");
  }
  if (materialized_) {
    out.resize(n);
    std::memcpy(out.data(), cache_.data() + p * n, n * sizeof(double));
    return;
  }
  if (agg_bounds_.empty()) {
    fill_master(p, out);
    return;
  }
  std::vector<double> master;
  fill_master(p, master);
  out.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t m = agg_bounds_[k]; m < agg_bounds_[k + 1]; ++m) {
      out[k] += master[m];
    }
  }
}

void BrownianBundle::materialize() {
  if (materialized_) return;
  const std::size_t n = grid_.n_steps();
  cache_.resize(n_paths_ * n);
  std::vector<double> buf;
  for (std::size_t p = 0; p < n_paths_; ++p) {
    fill_path(p, buf);
    std::memcpy(cache_.data() + p * n, buf.data(), n * sizeof(double));
  }
  materialized_ = true;
}

CoefficientBundle coefficients(const GameState& state, int investor,
                               const ValidatedScenario& scenario) {
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);
  const std::size_t own_pi = (investor == 1) ? 1 : 2;
  const std::size_t opp_pi = (investor == 1) ? 2 : 1;
  const double sig = scenario.market.vol(state.S);

  CoefficientBundle c{};
  // Drift per unit opponent rate.
  c.a = {-th_opp, 0.0, 0.0, -th_opp * state.pi_1, -th_opp * state.pi_2};
  c.a[opp_pi] = -1.0;
  // Drift per unit own rate.
  c.b = {-th_own, 0.0, 0.0, -th_own * state.pi_1, -th_own * state.pi_2};
  c.b[own_pi] = -1.0;
  // Diffusion.
  c.v = {sig, 0.0, 0.0, state.pi_1, state.pi_2};

  // Auxiliary coordinates (P, pi_opp, w_own, w_opp); own control value is
  // the state's own holding.
  const double q = state.pi(investor);
  const double pi_opp = state.pi_opp(investor);
  c.beta = {-th_opp, -1.0, -th_opp * q, th_own * q - th_opp * pi_opp};
  c.nu = {sig, 0.0, sig * q, sig * pi_opp};
  return c;
}

StatePath simulate_game_path(const ValidatedScenario& scenario,
                             const PiecewiseControl& x1,
                             const PiecewiseControl& x2,
                             const BrownianBundle& noise, std::size_t path) {
  const TimeGrid& grid = noise.grid();
  require_rate_control(x1, grid, "x1");
  require_rate_control(x2, grid, "x2");

  const MarketParams& mkt = scenario.market;
  StatePath out;
  out.grid = grid;
  out.x1 = x1;
  out.x2 = x2;
  noise.fill_path(path, out.dB);

  const std::size_t n = grid.n_steps();
  out.states.resize(n + 1);
  out.states[0] = GameState{mkt.s0, mkt.pi1_0, mkt.pi2_0, mkt.w1_0, mkt.w2_0};

  for (std::size_t k = 0; k < n; ++k) {
    const GameState& y = out.states[k];
    const double dt = grid.dt(k);
    const double dB = out.dB[k];
    const double dS = mkt.vol(y.S) * dB -
                      (mkt.theta_1 * x1.values[k] + mkt.theta_2 * x2.values[k]) * dt;
    GameState& next = out.states[k + 1];
    next.S = y.S + dS;
    next.pi_1 = y.pi_1 - x1.values[k] * dt;
    next.pi_2 = y.pi_2 - x2.values[k] * dt;
    next.W_1 = y.W_1 + y.pi_1 * dS;
    next.W_2 = y.W_2 + y.pi_2 * dS;
    for (double* c : {&next.S, &next.pi_1, &next.pi_2, &next.W_1, &next.W_2}) {
      if (!std::isfinite(*c)) throw NonFiniteState(k + 1);
      out.flagged = clamp_coord(*c) || out.flagged;
    }
  }
  return out;
}

std::vector<StatePath> simulate_game(const ValidatedScenario& scenario,
                                     const PiecewiseControl& x1,
                                     const PiecewiseControl& x2,
                                     const BrownianBundle& noise) {
  std::vector<StatePath> paths;
  paths.reserve(noise.n_paths());
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    paths.push_back(simulate_game_path(scenario, x1, x2, noise, p));
  }
  return paths;
}

SimDiagnostics for_each_game_path(
    const ValidatedScenario& scenario, const PiecewiseControl& x1,
    const PiecewiseControl& x2, const BrownianBundle& noise,
    const std::function<void(std::size_t, const StatePath&)>& fn) {
  SimDiagnostics diag;
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    StatePath path = simulate_game_path(scenario, x1, x2, noise, p);
    if (path.flagged) ++diag.flagged_paths;
    for (const GameState& y : path.states) {
      for (double c : {y.S, y.pi_1, y.pi_2, y.W_1, y.W_2}) {
        diag.max_state_norm = std::max(diag.max_state_norm, std::abs(c));
      }
    }
    fn(p, path);
  }
  return diag;
}

namespace {

void require_aux_controls(const ValidatedScenario& scenario,
                          const PiecewiseControl& pi_own,
                          const PiecewiseControl& x_opp, const TimeGrid& grid) {
  pi_own.check_shape();
  if (pi_own.kind != ControlKind::AuxHolding) {
    throw GridMismatch("pi_own: expected a holdings control");
  }
  if (!pi_own.grid.same_as(grid)) {
    throw GridMismatch("pi_own: control grid differs from the simulation grid");
  }
  for (double q : pi_own.values) {
    if (q < scenario.bounds.pi_lo || q > scenario.bounds.pi_hi) {
      throw BoundsViolation("pi_own: holding " + std::to_string(q) +
                            " outside [" + std::to_string(scenario.bounds.pi_lo) +
                            ", " + std::to_string(scenario.bounds.pi_hi) + "]");
    }
  }
  require_rate_control(x_opp, grid, "x_opp");
}

}  // namespace

AuxTerminal simulate_aux_terminal(const ValidatedScenario& scenario,
                                  int investor,
                                  const PiecewiseControl& pi_own,
                                  const PiecewiseControl& x_opp,
                                  const TimeGrid& grid,
                                  const std::vector<double>& dB) {
  const MarketParams& mkt = scenario.market;
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);

  AuxTerminal out;
  out.state = AuxState{mkt.s0, mkt.pi0(3 - investor), mkt.w0(investor),
                       mkt.w0(3 - investor)};
  AuxState& z = out.state;

  const std::size_t n = grid.n_steps();
  for (std::size_t k = 0; k < n; ++k) {
    const double q = pi_own.values[k];
    const double x = x_opp.values[k];
    const double dt = grid.dt(k);
    const double sig = mkt.vol(z.P + th_own * q);
    const double dP = -th_opp * x * dt + sig * dB[k];
    const double dw_opp =
        (th_own * q - th_opp * z.pi_opp) * x * dt + z.pi_opp * sig * dB[k];
    z.P += dP;
    z.pi_opp -= x * dt;
    z.w_own += q * dP;
    z.w_opp += dw_opp;
    for (double* c : {&z.P, &z.pi_opp, &z.w_own, &z.w_opp}) {
      if (!std::isfinite(*c)) throw NonFiniteState(k + 1);
      out.flagged = clamp_coord(*c) || out.flagged;
    }
  }
  return out;
}

AuxPath simulate_aux_path(const ValidatedScenario& scenario, int investor,
                          const PiecewiseControl& pi_own,
                          const PiecewiseControl& x_opp,
                          const BrownianBundle& noise, std::size_t path) {
  const TimeGrid& grid = noise.grid();
  require_aux_controls(scenario, pi_own, x_opp, grid);

  const MarketParams& mkt = scenario.market;
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);

  AuxPath out;
  out.grid = grid;
  out.pi_own = pi_own;
  out.x_opp = x_opp;
  out.investor = investor;
  noise.fill_path(path, out.dB);

  const std::size_t n = grid.n_steps();
  out.states.resize(n + 1);
  out.states[0] = AuxState{mkt.s0, mkt.pi0(3 - investor), mkt.w0(investor),
                           mkt.w0(3 - investor)};

  for (std::size_t k = 0; k < n; ++k) {
    const AuxState& z = out.states[k];
    const double q = pi_own.values[k];
    const double x = x_opp.values[k];
    const double dt = grid.dt(k);
    const double sig = mkt.vol(z.P + th_own * q);
    const double dP = -th_opp * x * dt + sig * out.dB[k];
    AuxState& next = out.states[k + 1];
    next.P = z.P + dP;
    next.pi_opp = z.pi_opp - x * dt;
    next.w_own = z.w_own + q * dP;
    next.w_opp = z.w_opp + (th_own * q - th_opp * z.pi_opp) * x * dt +
                 z.pi_opp * sig * out.dB[k];
    for (double* c : {&next.P, &next.pi_opp, &next.w_own, &next.w_opp}) {
      if (!std::isfinite(*c)) throw NonFiniteState(k + 1);
      out.flagged = clamp_coord(*c) || out.flagged;
    }
  }
  return out;
}

std::vector<AuxPath> simulate_aux(const ValidatedScenario& scenario,
                                  int investor,
                                  const PiecewiseControl& pi_own,
                                  const PiecewiseControl& x_opp,
                                  const BrownianBundle& noise) {
  std::vector<AuxPath> paths;
  paths.reserve(noise.n_paths());
  for (std::size_t p = 0; p < noise.n_paths(); ++p) {
    paths.push_back(simulate_aux_path(scenario, investor, pi_own, x_opp, noise, p));
  }
  return paths;
}

double wealth_identity_residual(const StatePath& path, int investor,
                                const ValidatedScenario& scenario) {
  const MarketParams& mkt = scenario.market;
  const double th_own = scenario.theta(investor);
  const double th_opp = scenario.theta_opp(investor);
  const PiecewiseControl& x_opp = (investor == 1) ? path.x2 : path.x1;

  const double pi_s = path.states[0].pi(investor);
  const double w_s = path.states[0].W(investor);

  double cross = 0.0;  // sum pi_own * x_opp * dt
  double mart = 0.0;   // sum pi_own * sigma(S) * dB
  double worst = 0.0;
  for (std::size_t m = 0; m <= path.grid.n_steps(); ++m) {
    const GameState& y = path.states[m];
    const double pi_m = y.pi(investor);
    const double rhs = w_s + 0.5 * th_own * (pi_m * pi_m - pi_s * pi_s) -
                       th_opp * cross + mart;
    worst = std::max(worst, std::abs(y.W(investor) - rhs));
    if (m < path.grid.n_steps()) {
      const double dt = path.grid.dt(m);
      cross += pi_m * x_opp.values[m] * dt;
      mart += pi_m * mkt.vol(y.S) * path.dB[m];
    }
  }
  return worst;
}

GameState blip_transport(const ValidatedScenario& scenario, int investor,
                         double q, double eps, const BrownianBundle& noise,
                         std::size_t path) {
  if (!(eps > 0.0)) {
    throw GridMismatch("blip_transport: eps must be positive");
  }
  const TimeGrid& grid = noise.grid();
  const MarketParams& mkt = scenario.market;
  if (std::abs(grid.nodes.front() - mkt.s) > 1e-9 ||
      std::abs(grid.nodes.back() - (mkt.s + eps)) > 1e-9) {
    throw GridMismatch("blip_transport: noise grid must cover [s, s + eps]");
  }

  std::vector<double> dB;
  noise.fill_path(path, dB);

  const double x = q / eps;
  const double th_own = scenario.theta(investor);
  GameState y{mkt.s0, mkt.pi1_0, mkt.pi2_0, mkt.w1_0, mkt.w2_0};
  double& pi_own = (investor == 1) ? y.pi_1 : y.pi_2;
  double& w_own = (investor == 1) ? y.W_1 : y.W_2;
  double& w_opp = (investor == 1) ? y.W_2 : y.W_1;
  const double pi_opp = y.pi_opp(investor);

  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double dt = grid.dt(k);
    const double dS = mkt.vol(y.S) * dB[k] - th_own * x * dt;
    const double pi_mid = pi_own - 0.5 * x * dt;
    y.S += dS;
    w_own += pi_mid * dS;
    w_opp += pi_opp * dS;
    pi_own -= x * dt;
    for (double c : {y.S, y.pi_1, y.pi_2, y.W_1, y.W_2}) {
      if (!std::isfinite(c)) throw NonFiniteState(k + 1);
    }
  }
  return y;
}

}  // namespace impactgame
