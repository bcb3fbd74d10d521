#include "impactgame/arbitrage.hpp"

#include <algorithm>
#include <cmath>

namespace impactgame {

namespace {

constexpr double kGainTolerance = 1e-10;

RoundTrip assemble(TripKind kind, double alpha, double beta, double T,
                   std::vector<double> nodes, std::vector<double> rates) {
  RoundTrip trip;
  trip.kind = kind;
  trip.alpha = alpha;
  trip.beta = beta;
  trip.horizon = T;
  trip.control.grid = TimeGrid{std::move(nodes)};
  trip.control.values = std::move(rates);
  trip.control.kind = ControlKind::TradingRate;

  // Zero the net traded volume exactly up to roundoff by adjusting the
  // final interval's rate.
  double integral = 0.0;
  const std::size_t n = trip.control.values.size();
  for (std::size_t k = 0; k < n; ++k) {
    integral += trip.control.values[k] * trip.control.grid.dt(k);
  }
  trip.control.values[n - 1] -= integral / trip.control.grid.dt(n - 1);
  return trip;
}

}  // namespace

ImpactFunction ImpactFunction::linear(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw BadParams("ImpactFunction::linear: theta must be positive");
  }
  ImpactFunction f;
  f.linear_ = true;
  f.theta_ = theta;
  return f;
}

ImpactFunction ImpactFunction::custom(std::function<double(double)> fn) {
  if (!fn) {
    throw BadParams("ImpactFunction::custom: empty evaluator");
  }
  ImpactFunction f;
  f.fn_ = std::move(fn);
  return f;
}

double ImpactFunction::operator()(double rate) const {
  return linear_ ? -theta_ * rate : fn_(rate);
}

double ImpactFunction::theta() const {
  if (!linear_) {
    throw BadParams("ImpactFunction::theta: not a linear impact function");
  }
  return theta_;
}

std::string trip_kind_name(TripKind kind) {
  switch (kind) {
    case TripKind::SymmetricBlock:
      return "SymmetricBlock";
    case TripKind::BuyFast:
      return "BuyFast";
    case TripKind::SellFast:
      return "SellFast";
    case TripKind::ThreePhase:
      return "ThreePhase";
  }
  return "Unknown";
}

RoundTrip make_roundtrip(TripKind kind, double alpha, double beta, double T) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(T > 0.0) ||
      !std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(T)) {
    throw BadParams("make_roundtrip: alpha, beta, T must be positive");
  }
  switch (kind) {
    case TripKind::SymmetricBlock:
      return assemble(kind, alpha, beta, T, {0.0, 0.5 * T, T}, {alpha, -alpha});
    case TripKind::SellFast: {
      const double tau = beta * T / (alpha + beta);
      return assemble(kind, alpha, beta, T, {0.0, tau, T}, {alpha, -beta});
    }
    case TripKind::BuyFast: {
      const double tau_hat = alpha * T / (alpha + beta);
      return assemble(kind, alpha, beta, T, {0.0, tau_hat, T}, {-beta, alpha});
    }
    case TripKind::ThreePhase:
      return assemble(kind, alpha, beta, T, {0.0, T / 3.0, 2.0 * T / 3.0, T},
                      {-alpha, 0.0, alpha});
  }
  throw BadParams("make_roundtrip: unknown kind");
}

RoundTrip mirrored(const RoundTrip& trip) {
  RoundTrip out = trip;
  for (double& v : out.control.values) v = -v;
  return out;
}

double expected_gain(const ImpactFunction& kappa, const RoundTrip& trip) {
  const TimeGrid& grid = trip.control.grid;
  double pi = 0.0;
  double gain = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double x = trip.control.values[k];
    const double dt = grid.dt(k);
    const double pi_next = pi - x * dt;
    gain += kappa(x) * 0.5 * (pi + pi_next) * dt;
    pi = pi_next;
  }
  return gain;
}

ArbitrageVerdict detect_dynamic_arbitrage(const ImpactFunction& kappa,
                                          std::vector<double> alpha_grid,
                                          std::vector<double> beta_grid,
                                          double T) {
  if (alpha_grid.empty() || beta_grid.empty()) {
    throw BadParams("detect_dynamic_arbitrage: empty rate grid");
  }
  for (double a : alpha_grid) {
    if (!(a > 0.0)) throw BadParams("detect_dynamic_arbitrage: rates must be positive");
  }
  for (double b : beta_grid) {
    if (!(b > 0.0)) throw BadParams("detect_dynamic_arbitrage: rates must be positive");
  }
  std::sort(alpha_grid.begin(), alpha_grid.end());
  std::sort(beta_grid.begin(), beta_grid.end());

  ArbitrageVerdict verdict;
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const RoundTrip& trip) {
    const double g = expected_gain(kappa, trip);
    if (g > best) {
      best = g;
      verdict.witness = trip;
      verdict.gain = g;
    }
  };

  for (double a : alpha_grid) {
    const RoundTrip trip = make_roundtrip(TripKind::SymmetricBlock, a, a, T);
    consider(trip);
    consider(mirrored(trip));
  }
  for (double a : alpha_grid) {
    for (double b : beta_grid) {
      consider(make_roundtrip(TripKind::BuyFast, a, b, T));
    }
  }
  for (double a : alpha_grid) {
    for (double b : beta_grid) {
      consider(make_roundtrip(TripKind::SellFast, a, b, T));
    }
  }
  const double at_zero = kappa(0.0);
  if (at_zero != 0.0) {
    const RoundTrip probe =
        make_roundtrip(TripKind::ThreePhase, std::abs(at_zero), 1.0, T);
    consider(probe);
    consider(mirrored(probe));
  }

  verdict.found = best > kGainTolerance;
  if (!verdict.found) {
    verdict.witness.reset();
    verdict.gain = 0.0;
  }
  return verdict;
}

}  // namespace impactgame
