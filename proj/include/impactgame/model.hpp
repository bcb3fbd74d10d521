#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace impactgame {

// Local volatility of the risky asset. Either a constant sigma >= 0 (zero
// gives a deterministic price, useful for exactness checks) or a
// user-supplied bounded Lipschitz function of the price, validated by
// sampling on a probe grid (declared constants are trusted beyond it).
class VolatilitySpec {
 public:
  static VolatilitySpec constant(double sigma);
  static VolatilitySpec bounded_lipschitz(std::function<double(double)> eval,
                                          double declared_bound,
                                          double declared_lipschitz);

  double operator()(double price) const {
    return constant_ ? sigma_ : eval_(price);
  }
  bool is_constant() const { return constant_; }
  // Constant-variant sigma; throws for the function variant.
  double constant_sigma() const;
  double declared_bound() const { return bound_; }
  double declared_lipschitz() const { return lipschitz_; }

  // Samples |sigma| and difference quotients on n points of [lo, hi];
  // returns a reason string on failure, empty on success.
  std::string probe(double lo, double hi, int n) const;

 private:
  VolatilitySpec() = default;
  bool constant_ = true;
  double sigma_ = 0.0;
  std::function<double(double)> eval_;
  double bound_ = 0.0;
  double lipschitz_ = 0.0;
};

struct MarketParams {
  double theta_1 = 1.0;  // permanent impact of investor 1, price per (share/time)*time
  double theta_2 = 1.0;  // permanent impact of investor 2
  VolatilitySpec vol = VolatilitySpec::constant(1.0);
  double s = 0.0;   // start time, years
  double T = 1.0;   // horizon, years
  double s0 = 0.0;  // initial price
  double w1_0 = 0.0;
  double w2_0 = 0.0;
  double pi1_0 = 0.0;  // initial holdings, shares
  double pi2_0 = 0.0;

  double theta(int investor) const { return investor == 1 ? theta_1 : theta_2; }
  double theta_opp(int investor) const { return investor == 1 ? theta_2 : theta_1; }
  double pi0(int investor) const { return investor == 1 ? pi1_0 : pi2_0; }
  double w0(int investor) const { return investor == 1 ? w1_0 : w2_0; }
};

struct Preferences {
  double delta_1 = 1.0;  // absolute risk aversion, 1/currency
  double delta_2 = 1.0;

  double delta(int investor) const { return investor == 1 ? delta_1 : delta_2; }
};

// Holding bounds for the auxiliary problem; the compact set must contain 0.
struct ControlBounds {
  double pi_lo = -1.0;
  double pi_hi = 1.0;
};

// Y = (S, pi_1, pi_2, W_1, W_2).
struct GameState {
  double S = 0.0;
  double pi_1 = 0.0;
  double pi_2 = 0.0;
  double W_1 = 0.0;
  double W_2 = 0.0;

  double pi(int investor) const { return investor == 1 ? pi_1 : pi_2; }
  double pi_opp(int investor) const { return investor == 1 ? pi_2 : pi_1; }
  double W(int investor) const { return investor == 1 ? W_1 : W_2; }
  double W_opp(int investor) const { return investor == 1 ? W_2 : W_1; }
  double& pi_ref(int investor) { return investor == 1 ? pi_1 : pi_2; }
  double& W_ref(int investor) { return investor == 1 ? W_1 : W_2; }
};

// Z = (P, pi_opp, w_own, w_opp), the state of the flow-quotient problem.
struct AuxState {
  double P = 0.0;
  double pi_opp = 0.0;
  double w_own = 0.0;
  double w_opp = 0.0;
};

struct TimeGrid {
  std::vector<double> nodes;  // strictly increasing, nodes.front()=s, nodes.back()=T

  static TimeGrid uniform(double s, double T, std::size_t n_steps);

  std::size_t n_steps() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  double dt(std::size_t k) const { return nodes[k + 1] - nodes[k]; }
  double span() const { return nodes.back() - nodes.front(); }
  bool same_as(const TimeGrid& other) const { return nodes == other.nodes; }
};

enum class ControlKind { TradingRate, AuxHolding };

// Constant on each interval (t_k, t_{k+1}]; values[k] belongs to interval k.
struct PiecewiseControl {
  TimeGrid grid;
  std::vector<double> values;
  ControlKind kind = ControlKind::TradingRate;

  static PiecewiseControl constant(const TimeGrid& grid, double value,
                                   ControlKind kind);

  double integral() const;             // sum of values[k] * dt_k
  double integral_abs() const;         // sum of |values[k]| * dt_k
  void check_shape() const;            // values.size() == n_steps
};

struct Violation {
  std::string field;
  std::string reason;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string format(const std::vector<Violation>& v);
  std::vector<Violation> violations_;
};

struct ValidatedScenario {
  MarketParams market;
  Preferences prefs;
  ControlBounds bounds;

  double theta(int i) const { return market.theta(i); }
  double theta_opp(int i) const { return market.theta_opp(i); }
  double delta(int i) const { return prefs.delta(i); }
};

// Returns the bundle unchanged if every type invariant holds; otherwise
// throws ValidationError listing all failed fields.
ValidatedScenario validate_market(const MarketParams& params,
                                  const Preferences& prefs,
                                  const ControlBounds& bounds);

// u(w) = -(1/delta) * exp(-delta * w). Throws NonPositiveDelta if delta <= 0.
double cara_utility(double w, double delta);

class NonPositiveDelta : public std::domain_error {
 public:
  NonPositiveDelta() : std::domain_error("cara_utility: delta must be > 0") {}
};

class NonConstantVolatility : public std::domain_error {
 public:
  NonConstantVolatility()
      : std::domain_error("operation requires constant volatility") {}
};

}  // namespace impactgame
