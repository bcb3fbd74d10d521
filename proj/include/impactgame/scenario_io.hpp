#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impactgame/model.hpp"

namespace impactgame {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat key = value scenario file. Unknown keys, duplicates, bad numbers,
// and missing required keys all fail with source:line diagnostics.
struct ScenarioConfig {
  double theta1 = 0.0, theta2 = 0.0;
  double sigma = 0.0;
  double delta1 = 0.0, delta2 = 0.0;
  double s = 0.0, T = 0.0;
  double S0 = 0.0, W1_0 = 0.0, W2_0 = 0.0;
  double pi1_0 = 0.0, pi2_0 = 0.0;
  double pi_lo = 0.0, pi_hi = 0.0;
  std::size_t n_steps = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  // Impact-function selection for the arbitrage subcommand and suite.
  std::string kappa = "linear";  // linear | quadratic_odd | affine | jump
  double kappa_theta = 0.0;      // 0 means "use theta1"
  double kappa_c = 0.3;          // offset used by affine and jump
  std::vector<double> arb_rates = {0.5, 1.0, 2.0};
  double arb_T = 3.0;
};

// The Figure-2-style default used when no config file is given.
ScenarioConfig default_config();

ScenarioConfig parse_config_text(const std::string& text,
                                 const std::string& source_name);
ScenarioConfig parse_config_file(const std::string& path);

// Canonical text form; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const ScenarioConfig& cfg);

ValidatedScenario to_scenario(const ScenarioConfig& cfg);
TimeGrid config_grid(const ScenarioConfig& cfg);

// Rate schedule CSV with header "t,x": one row per interval, t the interval's
// left node on the config grid. Errors name the file and line.
PiecewiseControl read_rate_csv(const std::string& path, const TimeGrid& grid);
void write_rate_csv(const std::string& path, const PiecewiseControl& control);

}  // namespace impactgame
