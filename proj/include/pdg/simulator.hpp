#pragma once

#include "pdg/core.hpp"
#include "pdg/odeint.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pdg {

/// Steering command as a function of the current flight state.  Pure;
/// evaluated once per control interval.
using SteeringPolicy = std::function<double(const State&)>;

/// Closed-loop flight setup, nondimensional throughout.
struct FlightParams {
  double control_dt = 0;      ///< zero-order-hold interval
  double gate_altitude = 0;   ///< terminate when r - 1 drops through this
  double t_max = 0;           ///< timeout
  IntegratorSettings integrator;

  void validate() const;
};

/// One control interval: the state at its start and the angle held across it.
struct FlightSample {
  double t = 0;
  State x;
  double beta = 0;
};

struct FlightLog {
  std::string source;  ///< "nn" | "reference"
  State initial;
  std::vector<FlightSample> samples;
  State terminal;
  double terminal_time = 0;
  double terminal_beta = 0;  ///< command at the terminal state
  bool reached_gate = false;
  bool clamped = false;  ///< some command fell outside [0, 2*pi]
  std::string message;
};

/// Fly from x0 under zero-order-hold guidance until the altitude gate.  A
/// start already at or below the gate terminates immediately with an empty
/// sample list.  Running out of t_max returns reached_gate = false rather
/// than throwing, so the partial log stays inspectable.
FlightLog fly_closed_loop(const State& x0, const SteeringPolicy& policy,
                          const FlightParams& params, const ProblemConfig& cfg);

/// Fly the reference trajectory's own steering schedule, linearly
/// interpolated in time (held constant beyond the last node), from the
/// reference's initial state.  Reproduces the reference up to schedule
/// resolution; same gate/timeout semantics as the closed loop.
FlightLog fly_open_loop(const Trajectory& reference, const FlightParams& params,
                        const ProblemConfig& cfg);

/// Dimensional, plot-ready log: t_s,altitude_m,u_ms,v_ms,mass_kg,beta_deg.
/// The terminal point is the last row.
std::string flight_log_csv(const FlightLog& log, const ScalingSet& scaling);

/// Terminal summary as a JSON object string (dimensional).
std::string terminal_summary_json(const FlightLog& log, const ScalingSet& scaling);

struct ComparisonReport {
  bool initial_condition_mismatch = false;
  double delta_final_time_s = 0;  ///< b minus a throughout
  double delta_fuel_kg = 0;
  double delta_beta_deg = 0;
  double delta_u_ms = 0;
  double delta_v_ms = 0;
  std::string aligned_csv;
};

/// Align b onto a's sample grid (linear interpolation, clamped at b's ends)
/// and report terminal deltas.  Differing initial states are flagged, not
/// fatal.
ComparisonReport compare_runs(const FlightLog& a, const FlightLog& b, const ScalingSet& scaling);

}  // namespace pdg
