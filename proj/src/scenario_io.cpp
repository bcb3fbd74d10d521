#include "impactgame/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace impactgame {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& where, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw ConfigError(where + ": expected a finite number, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& where, const std::string& value) {
  if (value.empty() || value[0] == '-') {
    throw ConfigError(where + ": expected a nonnegative integer, got '" +
                      value + "'");
  }
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError(where + ": expected a nonnegative integer, got '" +
                      value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<double> parse_double_list(const std::string& where,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw ConfigError(where + ": empty entry in list '" + value + "'");
    }
    out.push_back(parse_double(where, item));
  }
  if (out.empty()) {
    throw ConfigError(where + ": empty list");
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ScenarioConfig default_config() {
  ScenarioConfig cfg;
  cfg.theta1 = 1.0;
  cfg.theta2 = 1.0;
  cfg.sigma = 0.5;
  cfg.delta1 = 4.0;
  cfg.delta2 = 1.0;
  cfg.s = 0.0;
  cfg.T = 5.0;
  cfg.S0 = 10.0;
  cfg.W1_0 = 0.0;
  cfg.W2_0 = 0.0;
  cfg.pi1_0 = 0.6;
  cfg.pi2_0 = -1.0;
  cfg.pi_lo = -50.0;
  cfg.pi_hi = 50.0;
  cfg.n_steps = 250;
  cfg.n_paths = 2000;
  cfg.seed = 424242;
  return cfg;
}

ScenarioConfig parse_config_text(const std::string& text,
                                 const std::string& source_name) {
  ScenarioConfig cfg = default_config();
  std::set<std::string> seen;
  const std::set<std::string> required = {
      "theta1", "theta2", "sigma", "delta1", "delta2", "s",     "T",
      "S0",     "W1_0",   "W2_0",  "pi1_0",  "pi2_0",  "pi_lo", "pi_hi",
      "n_steps", "n_paths", "seed"};

  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = source_name + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }

    if (key == "theta1") cfg.theta1 = parse_double(where, value);
    else if (key == "theta2") cfg.theta2 = parse_double(where, value);
    else if (key == "sigma") cfg.sigma = parse_double(where, value);
    else if (key == "delta1") cfg.delta1 = parse_double(where, value);
    else if (key == "delta2") cfg.delta2 = parse_double(where, value);
    else if (key == "s") cfg.s = parse_double(where, value);
    else if (key == "T") cfg.T = parse_double(where, value);
    else if (key == "S0") cfg.S0 = parse_double(where, value);
    else if (key == "W1_0") cfg.W1_0 = parse_double(where, value);
    else if (key == "W2_0") cfg.W2_0 = parse_double(where, value);
    else if (key == "pi1_0") cfg.pi1_0 = parse_double(where, value);
    else if (key == "pi2_0") cfg.pi2_0 = parse_double(where, value);
    else if (key == "pi_lo") cfg.pi_lo = parse_double(where, value);
    else if (key == "pi_hi") cfg.pi_hi = parse_double(where, value);
    else if (key == "n_steps") cfg.n_steps = static_cast<std::size_t>(parse_uint(where, value));
    else if (key == "n_paths") cfg.n_paths = static_cast<std::size_t>(parse_uint(where, value));
    else if (key == "seed") cfg.seed = parse_uint(where, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "kappa") {
      if (value != "linear" && value != "quadratic_odd" && value != "affine" &&
          value != "jump") {
        throw ConfigError(where + ": kappa must be one of linear, "
                          "quadratic_odd, affine, jump; got '" + value + "'");
      }
      cfg.kappa = value;
    } else if (key == "kappa_theta") cfg.kappa_theta = parse_double(where, value);
    else if (key == "kappa_c") cfg.kappa_c = parse_double(where, value);
    else if (key == "arb_rates") cfg.arb_rates = parse_double_list(where, value);
    else if (key == "arb_T") cfg.arb_T = parse_double(where, value);
    else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }

  std::vector<std::string> missing;
  for (const auto& k : required) {
    if (!seen.count(k)) missing.push_back(k);
  }
  if (!missing.empty()) {
    std::string msg = source_name + ": missing required key";
    if (missing.size() > 1) msg += "s";
    for (const auto& k : missing) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
  if (cfg.n_steps == 0) {
    throw ConfigError(source_name + ": n_steps must be positive");
  }
  if (cfg.n_paths == 0) {
    throw ConfigError(source_name + ": n_paths must be positive");
  }
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open config file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  out += "theta1 = " + fmt(cfg.theta1) + "\n";
  out += "theta2 = " + fmt(cfg.theta2) + "\n";
  out += "sigma = " + fmt(cfg.sigma) + "\n";
  out += "delta1 = " + fmt(cfg.delta1) + "\n";
  out += "delta2 = " + fmt(cfg.delta2) + "\n";
  out += "s = " + fmt(cfg.s) + "\n";
  out += "T = " + fmt(cfg.T) + "\n";
  out += "S0 = " + fmt(cfg.S0) + "\n";
  out += "W1_0 = " + fmt(cfg.W1_0) + "\n";
  out += "W2_0 = " + fmt(cfg.W2_0) + "\n";
  out += "pi1_0 = " + fmt(cfg.pi1_0) + "\n";
  out += "pi2_0 = " + fmt(cfg.pi2_0) + "\n";
  out += "pi_lo = " + fmt(cfg.pi_lo) + "\n";
  out += "pi_hi = " + fmt(cfg.pi_hi) + "\n";
  out += "n_steps = " + std::to_string(cfg.n_steps) + "\n";
  out += "n_paths = " + std::to_string(cfg.n_paths) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "output_dir = " + cfg.output_dir + "\n";
  out += "kappa = " + cfg.kappa + "\n";
  out += "kappa_theta = " + fmt(cfg.kappa_theta) + "\n";
  out += "kappa_c = " + fmt(cfg.kappa_c) + "\n";
  std::string rates;
  for (std::size_t i = 0; i < cfg.arb_rates.size(); ++i) {
    if (i) rates += ",";
    rates += fmt(cfg.arb_rates[i]);
  }
  out += "arb_rates = " + rates + "\n";
  out += "arb_T = " + fmt(cfg.arb_T) + "\n";
  return out;
}

ValidatedScenario to_scenario(const ScenarioConfig& cfg) {
  MarketParams mkt;
  mkt.theta_1 = cfg.theta1;
  mkt.theta_2 = cfg.theta2;
  mkt.vol = VolatilitySpec::constant(cfg.sigma);
  mkt.s = cfg.s;
  mkt.T = cfg.T;
  mkt.s0 = cfg.S0;
  mkt.w1_0 = cfg.W1_0;
  mkt.w2_0 = cfg.W2_0;
  mkt.pi1_0 = cfg.pi1_0;
  mkt.pi2_0 = cfg.pi2_0;
  Preferences prefs{cfg.delta1, cfg.delta2};
  ControlBounds bounds{cfg.pi_lo, cfg.pi_hi};
  return validate_market(mkt, prefs, bounds);
}

TimeGrid config_grid(const ScenarioConfig& cfg) {
  return TimeGrid::uniform(cfg.s, cfg.T, cfg.n_steps);
}

PiecewiseControl read_rate_csv(const std::string& path, const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open control file");
  }
  PiecewiseControl control;
  control.grid = grid;
  control.kind = ControlKind::TradingRate;
  control.values.reserve(grid.n_steps());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ConfigError(path + ": empty control file");
  }
  ++line_no;
  if (trim(line) != "t,x") {
    throw ConfigError(path + ":1: expected header 't,x'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(where + ": expected 't,x' row");
    }
    const double t = parse_double(where, trim(line.substr(0, comma)));
    const double x = parse_double(where, trim(line.substr(comma + 1)));
    const std::size_t k = control.values.size();
    if (k >= grid.n_steps()) {
      throw ConfigError(where + ": more rows than grid intervals (" +
                        std::to_string(grid.n_steps()) + ")");
    }
    if (std::abs(t - grid.nodes[k]) > 1e-9) {
      throw ConfigError(where + ": node " + fmt(t) +
                        " does not match the config grid node " +
                        fmt(grid.nodes[k]));
    }
    control.values.push_back(x);
  }
  if (control.values.size() != grid.n_steps()) {
    throw ConfigError(path + ": got " + std::to_string(control.values.size()) +
                      " rows, expected " + std::to_string(grid.n_steps()));
  }
  return control;
}

void write_rate_csv(const std::string& path, const PiecewiseControl& control) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError(path + ": cannot open for writing");
  }
  out << "t,x\n";
  for (std::size_t k = 0; k < control.values.size(); ++k) {
    out << fmt(control.grid.nodes[k]) << "," << fmt(control.values[k]) << "\n";
  }
}

}  // namespace impactgame
