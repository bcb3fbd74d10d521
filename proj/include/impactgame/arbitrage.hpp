#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "impactgame/model.hpp"

namespace impactgame {

class BadParams : public std::invalid_argument {
 public:
  explicit BadParams(const std::string& what) : std::invalid_argument(what) {}
};

// Permanent price-impact contribution kappa(x) of trading at rate x.
class ImpactFunction {
 public:
  static ImpactFunction linear(double theta);
  static ImpactFunction custom(std::function<double(double)> fn);

  double operator()(double rate) const;
  bool is_linear() const { return linear_; }
  double theta() const;

 private:
  ImpactFunction() = default;
  bool linear_ = false;
  double theta_ = 0.0;
  std::function<double(double)> fn_;
};

enum class TripKind { SymmetricBlock, BuyFast, SellFast, ThreePhase };

std::string trip_kind_name(TripKind kind);

// Deterministic rate schedule with zero net traded volume.
struct RoundTrip {
  TripKind kind;
  double alpha = 0.0;
  double beta = 0.0;
  double horizon = 0.0;
  PiecewiseControl control;
};

// SymmetricBlock: +alpha on [0,T/2], -alpha after (beta ignored).
// SellFast: +alpha on [0, tau], -beta after, tau = beta*T/(alpha+beta).
// BuyFast: -beta on [0, tau_hat], +alpha after, tau_hat = alpha*T/(alpha+beta).
// ThreePhase: -alpha, 0, +alpha on thirds of [0,T] (beta ignored).
// The last interval's rate absorbs a correction so the control integrates
// to zero to within a few ulp.
RoundTrip make_roundtrip(TripKind kind, double alpha, double beta, double T);

// Same schedule with every rate negated.
RoundTrip mirrored(const RoundTrip& trip);

// Expected terminal wealth of the trip executed alone from a flat position:
// the integral of holdings times kappa(rate), evaluated exactly (holdings are
// piecewise linear, kappa(rate) piecewise constant). The Brownian part has
// zero mean and is dropped analytically.
double expected_gain(const ImpactFunction& kappa, const RoundTrip& trip);

struct ArbitrageVerdict {
  bool found = false;
  std::optional<RoundTrip> witness;
  double gain = 0.0;
};

// Evaluates the whole parametric catalog (symmetric blocks in both
// orientations, fast-in/fast-out blocks over the rate grids, and the
// kappa(0) probe when kappa(0) is nonzero); reports the max-gain trip if any
// gain exceeds 1e-10. Ties keep the earliest trip in (kind, alpha, beta)
// order with the unmirrored orientation first.
ArbitrageVerdict detect_dynamic_arbitrage(const ImpactFunction& kappa,
                                          std::vector<double> alpha_grid,
                                          std::vector<double> beta_grid,
                                          double T);

}  // namespace impactgame
