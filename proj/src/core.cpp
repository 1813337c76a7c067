#include "pdg/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace pdg {

using nlohmann::json;

static void require_positive(double x, const char* name) {
  if (!(x > 0) || !std::isfinite(x)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

void PhysicalConstants::validate() const {
  require_positive(moon_radius_m, "moon_radius_km");
  require_positive(moon_mu_m3s2, "moon_mu_m3s2");
  require_positive(g0_ms2, "g0_ms2");
  require_positive(thrust_n, "thrust_n");
  require_positive(isp_s, "isp_s");
  require_positive(initial_mass_kg, "initial_mass_kg");
}

void RegularizationConfig::validate() const {
  if (!(delta >= 0) || !std::isfinite(delta)) {
    throw ConfigError("reg_delta must be nonnegative and finite");
  }
  require_positive(epsilon, "reg_epsilon");
}

ScalingSet make_scaling(const PhysicalConstants& c) {
  c.validate();
  ScalingSet s;
  s.length_unit_m = c.moon_radius_m;
  s.speed_unit_ms = std::sqrt(c.moon_mu_m3s2 / c.moon_radius_m);
  s.time_unit_s = c.moon_radius_m / s.speed_unit_ms;
  s.mass_unit_kg = c.initial_mass_kg;
  s.thrust_unit_n = c.initial_mass_kg * c.moon_mu_m3s2 / (c.moon_radius_m * c.moon_radius_m);
  return s;
}

State nondimensionalize(const DimensionalState& s, const ScalingSet& sc) {
  return {s.r_m / sc.length_unit_m, s.u_ms / sc.speed_unit_ms, s.v_ms / sc.speed_unit_ms,
          s.m_kg / sc.mass_unit_kg};
}

DimensionalState dimensionalize(const State& s, const ScalingSet& sc) {
  return {s.r * sc.length_unit_m, s.u * sc.speed_unit_ms, s.v * sc.speed_unit_ms,
          s.m * sc.mass_unit_kg};
}

ProblemConfig make_problem(const PhysicalConstants& c, const RegularizationConfig& reg) {
  reg.validate();
  ProblemConfig p;
  p.scaling = make_scaling(c);
  p.reg = reg;
  p.mu = 1.0;
  p.thrust = c.thrust_n / p.scaling.thrust_unit_n;
  // Exhaust velocity Isp*g0 converts thrust to mass flow; same identity holds
  // in canonical units.
  p.mdot = (c.thrust_n / (c.isp_s * c.g0_ms2)) * p.scaling.time_unit_s / p.scaling.mass_unit_kg;
  return p;
}

void RunConfig::validate() const {
  constants.validate();
  reg.validate();
  require_positive(initial_radius_km, "initial_radius_km");
  if (initial_radius_km * 1000.0 < constants.moon_radius_m) {
    throw ConfigError("initial_radius_km is below the lunar surface");
  }
  require_positive(integrator_rel_tol, "integrator_rel_tol");
  require_positive(integrator_abs_tol, "integrator_abs_tol");
  if (integrator_max_step < 0 || dense_output_dt < 0) {
    throw ConfigError("integrator_max_step and dense_output_dt must be nonnegative");
  }
  if (sample_count < 1) throw ConfigError("sample_count must be at least 1");
  if (!(sample_radius_frac >= 0)) throw ConfigError("sample_radius_frac must be nonnegative");
  require_positive(sample_tau_max_factor, "sample_tau_max_factor");
  require_positive(sample_altitude_cap_factor, "sample_altitude_cap_factor");
  require_positive(sample_mass_cap, "sample_mass_cap");
  if (nn_trainer != "lm" && nn_trainer != "adam") {
    throw ConfigError("nn_trainer must be \"lm\" or \"adam\"");
  }
  if (nn_epochs < 0) throw ConfigError("nn_epochs must be nonnegative");
  if (nn_batch_size < 1) throw ConfigError("nn_batch_size must be at least 1");
  require_positive(nn_learning_rate, "nn_learning_rate");
  if (!(nn_lr_decay > 0 && nn_lr_decay <= 1)) throw ConfigError("nn_lr_decay must be in (0,1]");
  if (nn_lr_decay_every < 0) throw ConfigError("nn_lr_decay_every must be nonnegative");
  if (nn_hidden.empty()) throw ConfigError("nn_hidden must name at least one layer");
  for (int h : nn_hidden) {
    if (h < 1) throw ConfigError("nn_hidden sizes must be positive");
  }
  require_positive(control_dt_s, "control_dt_s");
  require_positive(gate_altitude_m, "gate_altitude_m");
  require_positive(sim_timeout_factor, "sim_timeout_factor");
}

State RunConfig::nominal_initial_state() const {
  const ScalingSet sc = make_scaling(constants);
  DimensionalState d;
  d.r_m = initial_radius_km * 1000.0;
  d.u_ms = initial_u_ms;
  d.v_ms = initial_v_ms;
  d.m_kg = constants.initial_mass_kg;
  return nondimensionalize(d, sc);
}

namespace {

struct ConfigReader {
  const json& j;
  std::vector<std::string> seen;

  double num(const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    seen.push_back(key);
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
  }

  int integer(const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    seen.push_back(key);
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(std::string("config key '") + key + "' must be an integer");
    }
    return v.get<int>();
  }

  std::uint64_t uint64(const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    seen.push_back(key);
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.is_number_float() || v.get<double>() < 0) {
      throw ConfigError(std::string("config key '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key, std::string fallback) {
    if (!j.contains(key)) return fallback;
    seen.push_back(key);
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<int> int_list(const char* key, std::vector<int> fallback) {
    if (!j.contains(key)) return fallback;
    seen.push_back(key);
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) {
        throw ConfigError(std::string("config key '") + key + "' must hold integers");
      }
      out.push_back(e.get<int>());
    }
    return out;
  }
};

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  RunConfig cfg;
  ConfigReader r{j, {}};

  cfg.constants.moon_radius_m = r.num("moon_radius_km", 1738.0) * 1000.0;
  cfg.constants.moon_mu_m3s2 = r.num("moon_mu_m3s2", cfg.constants.moon_mu_m3s2);
  cfg.constants.g0_ms2 = r.num("g0_ms2", cfg.constants.g0_ms2);
  cfg.constants.thrust_n = r.num("thrust_n", cfg.constants.thrust_n);
  cfg.constants.isp_s = r.num("isp_s", cfg.constants.isp_s);
  cfg.constants.initial_mass_kg = r.num("initial_mass_kg", cfg.constants.initial_mass_kg);
  cfg.reg.delta = r.num("reg_delta", cfg.reg.delta);
  cfg.reg.epsilon = r.num("reg_epsilon", cfg.reg.epsilon);
  cfg.initial_radius_km = r.num("initial_radius_km", cfg.initial_radius_km);
  cfg.initial_u_ms = r.num("initial_u_ms", cfg.initial_u_ms);
  cfg.initial_v_ms = r.num("initial_v_ms", cfg.initial_v_ms);
  cfg.integrator_rel_tol = r.num("integrator_rel_tol", cfg.integrator_rel_tol);
  cfg.integrator_abs_tol = r.num("integrator_abs_tol", cfg.integrator_abs_tol);
  cfg.integrator_max_step = r.num("integrator_max_step", cfg.integrator_max_step);
  cfg.dense_output_dt = r.num("dense_output_dt", cfg.dense_output_dt);
  cfg.sample_count = r.integer("sample_count", cfg.sample_count);
  cfg.sample_radius_frac = r.num("sample_radius_frac", cfg.sample_radius_frac);
  cfg.sample_tau_max_factor = r.num("sample_tau_max_factor", cfg.sample_tau_max_factor);
  cfg.sample_altitude_cap_factor =
      r.num("sample_altitude_cap_factor", cfg.sample_altitude_cap_factor);
  cfg.sample_mass_cap = r.num("sample_mass_cap", cfg.sample_mass_cap);
  cfg.rng_seed = r.uint64("rng_seed", cfg.rng_seed);
  cfg.nn_trainer = r.text("nn_trainer", cfg.nn_trainer);
  cfg.nn_epochs = r.integer("nn_epochs", cfg.nn_epochs);
  cfg.nn_batch_size = r.integer("nn_batch_size", cfg.nn_batch_size);
  cfg.nn_learning_rate = r.num("nn_learning_rate", cfg.nn_learning_rate);
  cfg.nn_lr_decay = r.num("nn_lr_decay", cfg.nn_lr_decay);
  cfg.nn_lr_decay_every = r.integer("nn_lr_decay_every", cfg.nn_lr_decay_every);
  cfg.nn_hidden = r.int_list("nn_hidden", cfg.nn_hidden);
  cfg.control_dt_s = r.num("control_dt_s", cfg.control_dt_s);
  cfg.gate_altitude_m = r.num("gate_altitude_m", cfg.gate_altitude_m);
  cfg.sim_timeout_factor = r.num("sim_timeout_factor", cfg.sim_timeout_factor);

  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto& k : r.seen) {
      if (k == it.key()) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key '" + it.key() + "'");
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

std::string default_config_text() {
  return R"cfg({
  // Physics. The gravitational parameter is configurable; the remaining
  // vehicle constants describe a single-engine lander at constant thrust.
  "moon_radius_km": 1738.0,
  "moon_mu_m3s2": 4.9028e12,
  "g0_ms2": 9.81,
  "thrust_n": 1500.0,
  "isp_s": 300.0,
  "initial_mass_kg": 600.0,

  // Vertical-landing penalty: weight and denominator floor.
  "reg_delta": 1.0e-5,
  "reg_epsilon": 1.0e-8,

  // Nominal initial condition. The transverse speed is read as 1679.5 m/s,
  // i.e. essentially the circular-orbit speed sqrt(mu/R0) at the surface
  // radius (= 1679.57 m/s for the constants above).
  "initial_radius_km": 1753.0,
  "initial_u_ms": 1679.5,
  "initial_v_ms": 0.0,

  // Adaptive integrator (nondimensional time units; 0 means automatic).
  "integrator_rel_tol": 1.0e-10,
  "integrator_abs_tol": 1.0e-12,
  "integrator_max_step": 0.0,
  "dense_output_dt": 0.0,

  // Touchdown-neighborhood sampling for dataset generation.
  "sample_count": 1200,
  "sample_radius_frac": 0.3,
  "sample_tau_max_factor": 1.2,
  "sample_altitude_cap_factor": 1.15,
  "sample_mass_cap": 1.2,
  "rng_seed": 20260822,

  // Steering-network training.  "lm" takes one full-batch damped
  // Gauss-Newton step per epoch and ignores the batch/learning-rate knobs;
  // "adam" is the mini-batch first-order alternative.
  "nn_trainer": "lm",
  "nn_epochs": 1000,
  "nn_batch_size": 256,
  "nn_learning_rate": 1.0e-3,
  "nn_lr_decay": 1.0,
  "nn_lr_decay_every": 0,
  "nn_hidden": [15, 15, 15],

  // Closed-loop flight.
  "control_dt_s": 0.1,
  "gate_altitude_m": 5.0,
  "sim_timeout_factor": 2.0
}
)cfg";
}

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

std::string hash_file(const std::string& path) {
  return fnv1a_hex(read_text_file(path));
}

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("PDG_LOG");
    if (!env) return LogLevel::Warn;
    std::string s(env);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[pdg:" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

}  // namespace pdg
