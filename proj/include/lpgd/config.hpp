#pragma once
// Flat `key = value` run configuration. `#` starts a comment, blank lines are
// skipped, unknown or duplicate keys are errors carrying the line number, and
// every key has a default, so the empty string parses to the default config.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/network.hpp"

namespace lpgd {

struct RunConfig {
  // model
  std::string variant = "full";
  int base_width = 16;
  float kappa = 10.0f;
  int height = 64;
  int width = 64;
  std::vector<int> aspp_rates{3, 6, 12, 18, 24};
  int input_channels = 1;
  // optimizer
  double base_lr = 1e-3;
  double power = 0.9;
  int steps = 3000;
  int batch_size = 8;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  // data
  std::string dir = "data/train";
  std::string val_dir;  // empty = no held-out eval after training
  bool augment = true;
  double gt_dropout = 0.0;
  // loss
  float lambda = 0.85f;
  float alpha = 10.0f;
  std::uint32_t seed = 1234;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void config_error(const std::string& origin, int line, const std::string& msg) {
  throw std::invalid_argument(origin + " line " + std::to_string(line) + ": " + msg);
}

inline long config_long(const std::string& v, const std::string& origin, int line) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) config_error(origin, line, "expected an integer, got '" + v + "'");
  return out;
}

inline double config_double(const std::string& v, const std::string& origin, int line) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) config_error(origin, line, "expected a number, got '" + v + "'");
  return out;
}

inline bool config_on_off(const std::string& v, const std::string& origin, int line) {
  if (v == "on") return true;
  if (v == "off") return false;
  config_error(origin, line, "expected on|off, got '" + v + "'");
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) detail::config_error(origin, lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) detail::config_error(origin, lineno, "empty key");
    for (const std::string& s : seen) {
      if (s == key) detail::config_error(origin, lineno, "duplicate key '" + key + "'");
    }
    seen.push_back(key);

    if (key == "variant") {
      parse_variant(val);  // validates
      cfg.variant = val;
    } else if (key == "base_width") {
      cfg.base_width = static_cast<int>(detail::config_long(val, origin, lineno));
    } else if (key == "kappa") {
      cfg.kappa = static_cast<float>(detail::config_double(val, origin, lineno));
    } else if (key == "input_size") {
      const std::size_t x = val.find('x');
      if (x == std::string::npos) detail::config_error(origin, lineno, "input_size wants HxW, e.g. 64x64");
      cfg.height = static_cast<int>(detail::config_long(val.substr(0, x), origin, lineno));
      cfg.width = static_cast<int>(detail::config_long(val.substr(x + 1), origin, lineno));
    } else if (key == "aspp_rates") {
      cfg.aspp_rates.clear();
      std::istringstream rs(val);
      std::string tok;
      while (std::getline(rs, tok, ',')) {
        cfg.aspp_rates.push_back(static_cast<int>(detail::config_long(detail::trim(tok), origin, lineno)));
      }
      if (cfg.aspp_rates.empty()) detail::config_error(origin, lineno, "aspp_rates must list at least one rate");
    } else if (key == "input_channels") {
      cfg.input_channels = static_cast<int>(detail::config_long(val, origin, lineno));
    } else if (key == "base_lr") {
      cfg.base_lr = detail::config_double(val, origin, lineno);
    } else if (key == "power") {
      cfg.power = detail::config_double(val, origin, lineno);
    } else if (key == "steps") {
      cfg.steps = static_cast<int>(detail::config_long(val, origin, lineno));
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(detail::config_long(val, origin, lineno));
    } else if (key == "checkpoint_every") {
      cfg.checkpoint_every = static_cast<int>(detail::config_long(val, origin, lineno));
    } else if (key == "dir") {
      cfg.dir = val;
    } else if (key == "val_dir") {
      cfg.val_dir = val;
    } else if (key == "augment") {
      cfg.augment = detail::config_on_off(val, origin, lineno);
    } else if (key == "gt_dropout") {
      cfg.gt_dropout = detail::config_double(val, origin, lineno);
    } else if (key == "lambda") {
      cfg.lambda = static_cast<float>(detail::config_double(val, origin, lineno));
    } else if (key == "alpha") {
      cfg.alpha = static_cast<float>(detail::config_double(val, origin, lineno));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint32_t>(detail::config_long(val, origin, lineno));
    } else {
      detail::config_error(origin, lineno, "unknown key '" + key + "'");
    }
  }

  if (cfg.steps < 0) throw std::invalid_argument(origin + ": steps must be non-negative");
  if (cfg.batch_size < 1) throw std::invalid_argument(origin + ": batch_size must be positive");
  if (cfg.checkpoint_every < 0) throw std::invalid_argument(origin + ": checkpoint_every must be non-negative");
  if (!(cfg.base_lr > 0.0)) throw std::invalid_argument(origin + ": base_lr must be positive");
  if (!(cfg.power >= 0.0)) throw std::invalid_argument(origin + ": power must be non-negative");
  if (!(cfg.lambda >= 0.0f && cfg.lambda <= 1.0f)) throw std::invalid_argument(origin + ": lambda must lie in [0,1]");
  if (!(cfg.alpha > 0.0f)) throw std::invalid_argument(origin + ": alpha must be positive");
  if (!(cfg.gt_dropout >= 0.0 && cfg.gt_dropout < 1.0)) throw std::invalid_argument(origin + ": gt_dropout must lie in [0,1)");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

// Canonical text form; parse_config(config_to_string(c)) reproduces c, which
// lets checkpoints embed their configuration.
inline std::string config_to_string(const RunConfig& c) {
  std::ostringstream o;
  o << "variant = " << c.variant << "\n";
  o << "base_width = " << c.base_width << "\n";
  o << "kappa = " << c.kappa << "\n";
  o << "input_size = " << c.height << "x" << c.width << "\n";
  o << "aspp_rates = ";
  for (std::size_t i = 0; i < c.aspp_rates.size(); ++i) {
    if (i) o << ",";
    o << c.aspp_rates[i];
  }
  o << "\n";
  o << "input_channels = " << c.input_channels << "\n";
  o << "base_lr = " << c.base_lr << "\n";
  o << "power = " << c.power << "\n";
  o << "steps = " << c.steps << "\n";
  o << "batch_size = " << c.batch_size << "\n";
  o << "checkpoint_every = " << c.checkpoint_every << "\n";
  o << "dir = " << c.dir << "\n";
  o << "val_dir = " << c.val_dir << "\n";
  o << "augment = " << (c.augment ? "on" : "off") << "\n";
  o << "gt_dropout = " << c.gt_dropout << "\n";
  o << "lambda = " << c.lambda << "\n";
  o << "alpha = " << c.alpha << "\n";
  o << "seed = " << c.seed << "\n";
  return o.str();
}

inline ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.variant = parse_variant(c.variant);
  m.input_channels = c.input_channels;
  m.base_width = c.base_width;
  m.aspp_rates = c.aspp_rates;
  m.kappa = c.kappa;
  m.height = c.height;
  m.width = c.width;
  m.seed = c.seed;
  return m;
}

}  // namespace lpgd
