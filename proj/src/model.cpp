#include "impactgame/model.hpp"

#include <cmath>
#include <sstream>

namespace impactgame {

VolatilitySpec VolatilitySpec::constant(double sigma) {
  VolatilitySpec v;
  v.constant_ = true;
  v.sigma_ = sigma;
  v.bound_ = sigma;
  v.lipschitz_ = 0.0;
  return v;
}

VolatilitySpec VolatilitySpec::bounded_lipschitz(
    std::function<double(double)> eval, double declared_bound,
    double declared_lipschitz) {
  VolatilitySpec v;
  v.constant_ = false;
  v.eval_ = std::move(eval);
  v.bound_ = declared_bound;
  v.lipschitz_ = declared_lipschitz;
  return v;
}

double VolatilitySpec::constant_sigma() const {
  if (!constant_)
    throw std::logic_error("VolatilitySpec: not the Constant variant");
  return sigma_;
}

std::string VolatilitySpec::probe(double lo, double hi, int n) const {
  if (constant_) {
    // sigma = 0 is admitted so deterministic scenarios stay expressible;
    // formulas that divide by sigma^2 guard against it at their call sites.
    if (sigma_ >= 0.0) return {};
    return "constant sigma must be >= 0";
  }
  if (n < 2 || !(hi > lo)) return "bad probe grid";
  const double slack = 1.0 + 1e-9;
  double prev_p = lo, prev_v = eval_(lo);
  for (int k = 0; k < n; ++k) {
    double p = lo + (hi - lo) * k / (n - 1);
    double v = eval_(p);
    if (!(std::abs(v) <= bound_ * slack))
      return "sampled |sigma| exceeds declared bound at price " +
             std::to_string(p);
    if (v < 0.0) return "sampled sigma negative at price " + std::to_string(p);
    if (k > 0) {
      double quot = std::abs(v - prev_v) / (p - prev_p);
      if (!(quot <= lipschitz_ * slack))
        return "sampled difference quotient exceeds declared Lipschitz "
               "constant near price " +
               std::to_string(p);
    }
    prev_p = p;
    prev_v = v;
  }
  return {};
}

TimeGrid TimeGrid::uniform(double s, double T, std::size_t n_steps) {
  if (!(T > s) || n_steps == 0)
    throw std::invalid_argument("TimeGrid::uniform: need T > s and n_steps >= 1");
  TimeGrid g;
  g.nodes.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    g.nodes[k] = s + (T - s) * static_cast<double>(k) / static_cast<double>(n_steps);
  g.nodes.front() = s;
  g.nodes.back() = T;
  return g;
}

PiecewiseControl PiecewiseControl::constant(const TimeGrid& grid, double value,
                                            ControlKind kind) {
  PiecewiseControl c;
  c.grid = grid;
  c.values.assign(grid.n_steps(), value);
  c.kind = kind;
  return c;
}

double PiecewiseControl::integral() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) acc += values[k] * grid.dt(k);
  return acc;
}

double PiecewiseControl::integral_abs() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    acc += std::abs(values[k]) * grid.dt(k);
  return acc;
}

void PiecewiseControl::check_shape() const {
  if (values.size() != grid.n_steps())
    throw std::invalid_argument(
        "PiecewiseControl: values.size() != grid.n_steps()");
}

std::string ValidationError::format(const std::vector<Violation>& v) {
  std::ostringstream os;
  os << "scenario validation failed:";
  for (const auto& item : v) os << " [" << item.field << ": " << item.reason << "]";
  return os.str();
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(format(violations)), violations_(std::move(violations)) {}

ValidatedScenario validate_market(const MarketParams& params,
                                  const Preferences& prefs,
                                  const ControlBounds& bounds) {
  std::vector<Violation> bad;
  if (!(params.theta_1 > 0.0)) bad.push_back({"theta_1", "must be > 0"});
  if (!(params.theta_2 > 0.0)) bad.push_back({"theta_2", "must be > 0"});
  if (!(params.s >= 0.0)) bad.push_back({"s", "must be >= 0"});
  if (!(params.s < params.T)) bad.push_back({"T", "must satisfy s < T"});
  if (!std::isfinite(params.T)) bad.push_back({"T", "must be finite"});
  for (auto [name, val] :
       {std::pair<const char*, double>{"s0", params.s0},
        {"w1_0", params.w1_0},
        {"w2_0", params.w2_0},
        {"pi1_0", params.pi1_0},
        {"pi2_0", params.pi2_0}}) {
    if (!std::isfinite(val)) bad.push_back({name, "must be finite"});
  }
  if (!(prefs.delta_1 > 0.0)) bad.push_back({"delta_1", "must be > 0"});
  if (!(prefs.delta_2 > 0.0)) bad.push_back({"delta_2", "must be > 0"});
  if (!(bounds.pi_lo <= 0.0)) bad.push_back({"pi_lo", "0 must lie in [pi_lo, pi_hi]"});
  if (!(bounds.pi_hi >= 0.0)) bad.push_back({"pi_hi", "0 must lie in [pi_lo, pi_hi]"});
  if (!(bounds.pi_lo < bounds.pi_hi))
    bad.push_back({"pi_hi", "bounds must have positive width"});

  // Volatility probe around the scenario's price scale.
  double scale = std::max({1.0, std::abs(params.s0),
                           params.vol.declared_bound() * std::sqrt(std::max(params.T, 1.0)) * 4.0});
  std::string reason = params.vol.probe(params.s0 - 4.0 * scale,
                                        params.s0 + 4.0 * scale, 101);
  if (!reason.empty()) bad.push_back({"vol", reason});

  if (!bad.empty()) throw ValidationError(std::move(bad));
  return ValidatedScenario{params, prefs, bounds};
}

double cara_utility(double w, double delta) {
  if (!(delta > 0.0)) throw NonPositiveDelta();
  return -std::exp(-delta * w) / delta;
}

}  // namespace impactgame
