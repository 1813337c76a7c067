#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

/// Fuel-optimal powered-descent guidance for a vertical lunar landing.
///
/// Everything downstream of configuration parsing works in nondimensional
/// units: length in lunar radii, speed in units of the circular-orbit speed
/// at the surface, time in the corresponding dynamical time, mass in units
/// of the reference initial mass.  The gravitational parameter is 1 in
/// these units.
namespace pdg {

/// Invalid or inconsistent user input (config files, CLI arguments, schemas).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solver failed to converge or produced non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Physical setup
// ---------------------------------------------------------------------------

/// Dimensional constants describing the vehicle and the Moon.
struct PhysicalConstants {
  double moon_radius_m = 1.738e6;      ///< mean lunar radius
  double moon_mu_m3s2 = 4.9028e12;     ///< lunar gravitational parameter
  double g0_ms2 = 9.81;                ///< reference gravity in the Isp identity
  double thrust_n = 1500.0;            ///< constant thrust magnitude
  double isp_s = 300.0;                ///< specific impulse
  double initial_mass_kg = 600.0;      ///< reference (initial) vehicle mass

  void validate() const;
};

/// Weight delta and floor epsilon of the vertical-landing penalty term.
struct RegularizationConfig {
  double delta = 1.0e-5;
  double epsilon = 1.0e-8;

  void validate() const;
};

/// Conversion factors between dimensional and nondimensional quantities.
struct ScalingSet {
  double length_unit_m = 0;
  double speed_unit_ms = 0;
  double time_unit_s = 0;
  double mass_unit_kg = 0;
  double thrust_unit_n = 0;
};

/// Build the canonical unit system from the physical constants.
///
/// length = R0, speed = sqrt(mu/R0), time = sqrt(R0^3/mu), mass = m0,
/// thrust = m0*mu/R0^2.  With these units the nondimensional gravitational
/// parameter is exactly 1.
ScalingSet make_scaling(const PhysicalConstants& c);

// ---------------------------------------------------------------------------
// State types (nondimensional)
// ---------------------------------------------------------------------------

/// Planar lander state: radius, transverse speed, radial speed, mass.
struct State {
  double r = 0;
  double u = 0;
  double v = 0;
  double m = 0;

  Eigen::Vector4d vec() const { return {r, u, v, m}; }
  static State from_vec(const Eigen::Vector4d& y) { return {y[0], y[1], y[2], y[3]}; }
};

/// Adjoint variables paired with State.
struct Costate {
  double p_r = 0;
  double p_u = 0;
  double p_v = 0;
  double p_m = 0;

  Eigen::Vector4d vec() const { return {p_r, p_u, p_v, p_m}; }
  static Costate from_vec(const Eigen::Vector4d& y) { return {y[0], y[1], y[2], y[3]}; }
};

/// Same layout as State but in SI units.
struct DimensionalState {
  double r_m = 0;
  double u_ms = 0;
  double v_ms = 0;
  double m_kg = 0;
};

State nondimensionalize(const DimensionalState& s, const ScalingSet& sc);
DimensionalState dimensionalize(const State& s, const ScalingSet& sc);

// ---------------------------------------------------------------------------
// Problem configuration (nondimensional)
// ---------------------------------------------------------------------------

/// Everything the dynamics need, already nondimensionalized.
struct ProblemConfig {
  ScalingSet scaling;
  RegularizationConfig reg;
  double mu = 1.0;      ///< gravitational parameter in canonical units
  double thrust = 0;    ///< nondimensional thrust magnitude
  double mdot = 0;      ///< nondimensional mass-flow magnitude

  /// Regularization weight switched off (used by the homotopy start).
  ProblemConfig with_delta(double delta) const {
    ProblemConfig out = *this;
    out.reg.delta = delta;
    return out;
  }
};

ProblemConfig make_problem(const PhysicalConstants& c, const RegularizationConfig& reg);

// ---------------------------------------------------------------------------
// Run configuration (parsed from JSON)
// ---------------------------------------------------------------------------

/// Flat key/value configuration for the command-line pipeline.  Dimensional
/// keys carry their unit in the name; everything else is nondimensional.
struct RunConfig {
  PhysicalConstants constants;
  RegularizationConfig reg;

  // Nominal initial condition (dimensional).
  double initial_radius_km = 1753.0;
  double initial_u_ms = 1679.5;
  double initial_v_ms = 0.0;

  // Integrator.
  double integrator_rel_tol = 1.0e-10;
  double integrator_abs_tol = 1.0e-12;
  double integrator_max_step = 0.0;    ///< nondimensional; 0 = span
  double dense_output_dt = 0.0;        ///< nondimensional; 0 = span/200

  // Touchdown-neighborhood sampling.
  int sample_count = 1200;
  double sample_radius_frac = 0.3;
  double sample_tau_max_factor = 1.2;
  double sample_altitude_cap_factor = 1.15;
  double sample_mass_cap = 1.2;
  std::uint64_t rng_seed = 20260822ull;

  // Network training.
  std::string nn_trainer = "lm";       ///< "lm" (full-batch curvature steps) or "adam"
  int nn_epochs = 1000;
  int nn_batch_size = 256;
  double nn_learning_rate = 1.0e-3;
  double nn_lr_decay = 1.0;
  int nn_lr_decay_every = 0;           ///< epochs between decays; 0 = constant
  std::vector<int> nn_hidden = {15, 15, 15};

  // Closed-loop simulation.
  double control_dt_s = 0.1;
  double gate_altitude_m = 5.0;
  double sim_timeout_factor = 2.0;

  void validate() const;
  ProblemConfig make_problem_config() const { return make_problem(constants, reg); }

  /// Nominal initial state in nondimensional units (mass = 1).
  State nominal_initial_state() const;
};

/// Parse a JSON config (// comments allowed).  Unknown keys are an error.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// The default configuration serialized with explanatory comments.
std::string default_config_text();

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

/// Shortest exact decimal form of a double (17 significant digits).
std::string format_g17(double x);

/// FNV-1a hash of a byte string, as fixed-width hex.
std::string fnv1a_hex(const std::string& bytes);

/// FNV-1a hash of a file's contents.  Throws ConfigError if unreadable.
std::string hash_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Uniform draws built directly on the raw 64-bit stream, so sequences are
/// bit-identical across standard libraries (the distribution adaptors are
/// not portable).
inline double rng_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from PDG_LOG (error|warn|info|debug), default warn.
LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

inline void log_info(const std::string& msg) { log_message(LogLevel::Info, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::Warn, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::Debug, msg); }

}  // namespace pdg
