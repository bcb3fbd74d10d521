#include "impactgame/flow.hpp"

namespace impactgame {

GameState flow_full(double q, const GameState& y, int investor,
                    const MarketParams& mkt) {
  const double th = mkt.theta(investor);
  GameState out = y;
  out.S = y.S - th * q;
  out.pi_ref(investor) = y.pi(investor) - q;
  out.W_ref(investor) = y.W(investor) - th * (y.pi(investor) * q - 0.5 * q * q);
  out.W_ref(investor == 1 ? 2 : 1) =
      y.W_opp(investor) - th * y.pi_opp(investor) * q;
  return out;
}

AuxState flow_abridged(double q, const AuxState& z, double pi_own,
                       int investor, const MarketParams& mkt) {
  const double th = mkt.theta(investor);
  AuxState out = z;
  out.P = z.P - th * q;
  out.w_own = z.w_own - th * pi_own * q + 0.5 * th * q * q;
  out.w_opp = z.w_opp - th * z.pi_opp * q;
  return out;
}

Matrix5 flow_jacobian(double q, int investor, const MarketParams& mkt) {
  const double th = mkt.theta(investor);
  Matrix5 m{};
  for (int i = 0; i < 5; ++i) m[i][i] = 1.0;
  // B has exactly two nonzero entries: d b_W_own / d pi_own and
  // d b_W_opp / d pi_opp, both equal to -theta_i.
  const int own_pi = investor == 1 ? 1 : 2;
  const int opp_pi = investor == 1 ? 2 : 1;
  const int own_W = investor == 1 ? 3 : 4;
  const int opp_W = investor == 1 ? 4 : 3;
  m[own_W][own_pi] = -th * q;
  m[opp_W][opp_pi] = -th * q;
  return m;
}

namespace {

std::array<double, 5> drift_b(const std::array<double, 5>& y, int investor,
                              double th) {
  const double pi_own = investor == 1 ? y[1] : y[2];
  const double pi_opp = investor == 1 ? y[2] : y[1];
  std::array<double, 5> b{};
  b[0] = -th;
  b[investor == 1 ? 1 : 2] = -1.0;
  b[investor == 1 ? 3 : 4] = -th * pi_own;
  b[investor == 1 ? 4 : 3] = -th * pi_opp;
  return b;
}

}  // namespace

GameState flow_ode_oracle(double q, const GameState& y, int investor,
                          const MarketParams& mkt, std::size_t n_steps) {
  if (n_steps == 0) n_steps = 1;
  const double th = mkt.theta(investor);
  const double h = q / static_cast<double>(n_steps);
  std::array<double, 5> u{y.S, y.pi_1, y.pi_2, y.W_1, y.W_2};
  auto axpy = [](const std::array<double, 5>& a, double c,
                 const std::array<double, 5>& d) {
    std::array<double, 5> r;
    for (int i = 0; i < 5; ++i) r[i] = a[i] + c * d[i];
    return r;
  };
  for (std::size_t k = 0; k < n_steps; ++k) {
    auto k1 = drift_b(u, investor, th);
    auto k2 = drift_b(axpy(u, 0.5 * h, k1), investor, th);
    auto k3 = drift_b(axpy(u, 0.5 * h, k2), investor, th);
    auto k4 = drift_b(axpy(u, h, k3), investor, th);
    for (int i = 0; i < 5; ++i)
      u[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return GameState{u[0], u[1], u[2], u[3], u[4]};
}

AuxState aux_coords(const GameState& y, int investor, const MarketParams& mkt) {
  const double th = mkt.theta(investor);
  const double pi_own = y.pi(investor);
  AuxState z;
  z.P = y.S - th * pi_own;
  z.pi_opp = y.pi_opp(investor);
  z.w_own = y.W(investor) - 0.5 * th * pi_own * pi_own;
  z.w_opp = y.W_opp(investor) - th * z.pi_opp * pi_own;
  return z;
}

}  // namespace impactgame
