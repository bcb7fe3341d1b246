#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "minimax_lb/instances.hpp"

namespace minimax_lb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-oriented `key = value` configuration.  Blank lines and lines starting
// with '#' are ignored; values run to the end of the line.  Lists are
// comma-separated.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& name = "<stream>") {
    KeyValueConfig cfg;
    cfg.name_ = name;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped.front() == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": expected `key = value`, got `" +
                          stripped + "`");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty())
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  const std::string& raw(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(name_ + ": missing required key `" + key + "`");
    return it->second;
  }

  std::string text(const std::string& key) const { return raw(key); }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double number(const std::string& key) const { return to_double(key, raw(key)); }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  long integer(const std::string& key) const {
    const double v = number(key);
    return static_cast<long>(v);
  }
  long integer(const std::string& key, long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    try {
      return std::stoull(raw(key));
    } catch (const std::exception&) {
      throw ConfigError(name_ + ": key `" + key + "` is not a valid seed: " + raw(key));
    }
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(to_double(key, t));
    }
    if (out.empty()) throw ConfigError(name_ + ": key `" + key + "` holds an empty list");
    return out;
  }
  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? list(key) : fallback;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  double to_double(const std::string& key, const std::string& value) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(name_ + ": key `" + key + "` is not a number: " + value);
    }
  }

  std::map<std::string, std::string> kv_;
  std::string name_;
};

// Instance parameters from a config: keys L, mu, Delta, eps, sigma (optional),
// R1, R2, variant (optional, must agree with sigma when present).
inline InstanceSpec instance_spec_from_config(const KeyValueConfig& cfg) {
  InstanceSpec spec;
  spec.L = cfg.number("L");
  spec.mu = cfg.number("mu");
  spec.Delta = cfg.number("Delta");
  spec.eps = cfg.number("eps");
  if (cfg.has("sigma")) spec.sigma = cfg.number("sigma");
  spec.R1 = cfg.number("R1", 2.0);
  spec.R2 = cfg.number("R2", 60.0);
  if (cfg.has("variant")) {
    const std::string v = cfg.text("variant");
    if (v != "deterministic" && v != "stochastic")
      throw ConfigError("variant must be `deterministic` or `stochastic`, got `" + v + "`");
    const bool wants_stochastic = (v == "stochastic");
    if (wants_stochastic && !spec.sigma)
      throw ConfigError("variant = stochastic requires a sigma value");
    if (!wants_stochastic && spec.sigma)
      throw ConfigError("variant = deterministic conflicts with a sigma value");
  }
  return spec;
}

struct ExperimentConfig {
  InstanceSpec spec;
  std::string algorithm = "gda";
  double eta_x = 0.0;  // 0 = algorithm default
  double eta_y = 0.0;
  long budget = 0;  // 0 = witness budget n(T-1)
  int replicas = 1;
  std::uint64_t seed = 1;
  double p_override = 0.0;  // 0 = recipe value (stochastic oracle only)
  std::string output_prefix = "experiment";
  int workers = 0;  // 0 = hardware concurrency
  bool record_iterations = true;
};

inline ExperimentConfig experiment_from_config(const KeyValueConfig& cfg) {
  ExperimentConfig ec;
  ec.spec = instance_spec_from_config(cfg);
  ec.algorithm = cfg.text("algorithm", "gda");
  ec.eta_x = cfg.number("eta_x", 0.0);
  ec.eta_y = cfg.number("eta_y", 0.0);
  ec.budget = cfg.integer("budget", 0);
  ec.replicas = static_cast<int>(cfg.integer("replicas", 1));
  ec.seed = cfg.seed("seed", 1);
  ec.p_override = cfg.number("p", 0.0);
  ec.output_prefix = cfg.text("output", "experiment");
  ec.workers = static_cast<int>(cfg.integer("workers", 0));
  ec.record_iterations = cfg.integer("record_iterations", 1) != 0;
  if (ec.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (ec.budget < 0) throw ConfigError("budget must be >= 0");
  return ec;
}

struct SweepConfig {
  double L = 1.0;
  double Delta = 1.0;
  std::vector<double> kappa_grid;
  std::vector<double> eps_grid;
  std::vector<double> sigma_grid;  // empty = deterministic sweep
  double R1 = 2.0;
  double R2 = 60.0;
  std::string algorithm = "greedy-fill";
  double eta_x = 0.0;
  double eta_y = 0.0;
  long budget = 0;  // 0 = witness budget per cell
  int replicas = 4;
  std::uint64_t seed = 1;
  std::string output_prefix = "sweep";
  int workers = 0;
};

inline SweepConfig sweep_from_config(const KeyValueConfig& cfg) {
  SweepConfig sc;
  sc.L = cfg.number("L", 1.0);
  sc.Delta = cfg.number("Delta");
  sc.kappa_grid = cfg.list("kappa_grid");
  sc.eps_grid = cfg.list("eps_grid");
  if (cfg.has("sigma_grid")) sc.sigma_grid = cfg.list("sigma_grid");
  sc.R1 = cfg.number("R1", 2.0);
  sc.R2 = cfg.number("R2", 60.0);
  sc.algorithm = cfg.text("algorithm", "greedy-fill");
  sc.eta_x = cfg.number("eta_x", 0.0);
  sc.eta_y = cfg.number("eta_y", 0.0);
  sc.budget = cfg.integer("budget", 0);
  sc.replicas = static_cast<int>(cfg.integer("replicas", 4));
  sc.seed = cfg.seed("seed", 1);
  sc.output_prefix = cfg.text("output", "sweep");
  sc.workers = static_cast<int>(cfg.integer("workers", 0));
  if (sc.replicas < 1) throw ConfigError("replicas must be >= 1");
  for (double k : sc.kappa_grid)
    if (!(k >= 1.0)) throw ConfigError("kappa_grid entries must be >= 1");
  return sc;
}

// Machine-readable record of an instance: user parameters plus every derived
// constant.  Rebuilding from the embedded parameters reproduces the derived
// block bit for bit.
inline nlohmann::json metadata_json(const InstanceSpec& spec, const DerivedConstants& d) {
  nlohmann::json j;
  j["parameters"] = {
      {"L", spec.L},   {"mu", spec.mu}, {"Delta", spec.Delta}, {"eps", spec.eps},
      {"R1", spec.R1}, {"R2", spec.R2},
      {"variant",
       spec.variant() == InstanceVariant::Deterministic ? "deterministic" : "stochastic"},
  };
  if (spec.sigma) j["parameters"]["sigma"] = *spec.sigma;
  j["derived"] = {
      {"kappa", d.kappa},
      {"n", d.n},
      {"T", d.T},
      {"lambda", d.lambda},
      {"ell0", d.ell0},
      {"ellm", d.ellm},
      {"Lm", d.Lm},
      {"p", d.p},
      {"a1", d.hm.a1},
      {"a2", d.hm.a2},
      {"C", d.hm.C},
      {"c1", d.hm.c1},
      {"c2", d.hm.c2},
      {"chain_dim", (d.T - 1) * (d.n + 2) + 1},
      {"witness_budget", static_cast<long>(d.n) * (d.T - 1)},
  };
  if (std::isfinite(d.G)) j["derived"]["G"] = d.G;
  else j["derived"]["G"] = nullptr;
  if (std::isfinite(d.grad_inf_bound)) j["derived"]["grad_inf_bound"] = d.grad_inf_bound;
  else j["derived"]["grad_inf_bound"] = nullptr;
  if (spec.variant() == InstanceVariant::Stochastic) {
    j["domain"] = {{"xz_radius", d.lambda * spec.R1},
                   {"y_radius", d.lambda * static_cast<double>(d.n) * spec.R2}};
  } else {
    j["domain"] = "unbounded";
  }
  return j;
}

inline InstanceSpec instance_spec_from_metadata(const nlohmann::json& j) {
  const auto& p = j.at("parameters");
  InstanceSpec spec;
  spec.L = p.at("L").get<double>();
  spec.mu = p.at("mu").get<double>();
  spec.Delta = p.at("Delta").get<double>();
  spec.eps = p.at("eps").get<double>();
  spec.R1 = p.at("R1").get<double>();
  spec.R2 = p.at("R2").get<double>();
  if (p.contains("sigma")) spec.sigma = p.at("sigma").get<double>();
  return spec;
}

}  // namespace minimax_lb
