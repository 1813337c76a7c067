#pragma once

#include "pdg/core.hpp"
#include "pdg/dynamics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace pdg {

/// Stack-allocated work vector for the small systems integrated here
/// (4-dimensional state-only up to the 9-dimensional extremal system).
using OdeVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 9, 1>;

/// Adaptive step control for the embedded 5(4) pair.
struct IntegratorSettings {
  double rel_tol = 1.0e-10;
  double abs_tol = 1.0e-12;
  double max_step = 0;         ///< 0 = span of the requested interval
  double dense_output_dt = 0;  ///< node-emission grid; 0 = span/200

  void validate() const;
};

enum class TerminationStatus {
  ReachedEnd,      ///< integrated to the end of the requested span
  EventTriggered,  ///< stopped at a located event
  Timeout,         ///< event never fired within the span
  StepFailure,     ///< step size underflowed or derivatives went non-finite
};

const char* to_string(TerminationStatus s);

/// One emitted sample of an extremal: state, costate, and the control
/// quantities re-derived at that point.
struct TrajectoryNode {
  double t = 0;
  State x;
  Costate p;
  double beta = 0;
  double hamiltonian = 0;
  double delta_term = 0;
};

struct TrajectoryMeta {
  double p_r0 = 0, p_u0 = 0, p_v0 = 0;  ///< touchdown-end costate triple
  double final_time = 0;
  std::string config_hash;
  TerminationStatus status = TerminationStatus::ReachedEnd;
};

/// Time-ordered extremal samples plus provenance.
struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  TrajectoryMeta meta;
};

// ---------------------------------------------------------------------------
// Generic integration core
// ---------------------------------------------------------------------------

using OdeRhs = std::function<void(double t, const OdeVec& y, OdeVec& dy)>;

/// Scalar event g(t, y).  A trigger is a directional sign change of g, or a
/// grazing pass: a local extremum of g (located through the slope function)
/// at which |g| <= grazing_tol.  The grazing path keeps tangential contacts
/// locatable to full time precision where g itself is quadratically flat.
struct OdeEvent {
  std::function<double(double t, const OdeVec& y)> value;
  int direction = 0;  ///< -1: descending, +1: ascending, 0: any crossing
  std::function<double(double t, const OdeVec& y)> slope;  ///< optional dg/dt
  double grazing_tol = 0;  ///< 0 disables grazing detection
};

struct IntegrationResult {
  std::vector<double> times;
  std::vector<OdeVec> states;
  TerminationStatus status = TerminationStatus::ReachedEnd;
  int triggered_event = -1;
  double end_time = 0;
  OdeVec end_state;
  long accepted_steps = 0;
  long rejected_steps = 0;
  std::string message;
};

/// Integrate dy/dt = rhs over [t0, t1] (t1 > t0) with the Dormand-Prince
/// 5(4) pair, PI step-size control, and fourth-order dense output.  Samples
/// are emitted on the dense grid plus every accepted step endpoint.  If
/// `events` is nonempty, integration stops at the first trigger; running out
/// of span with pending events yields Timeout.
IntegrationResult integrate(const OdeRhs& rhs, double t0, double t1, const OdeVec& y0,
                            const IntegratorSettings& settings,
                            const std::vector<OdeEvent>& events = {});

// ---------------------------------------------------------------------------
// Extremal propagation
// ---------------------------------------------------------------------------

/// Pack/unpack of the 9-dimensional extremal vector
/// (r, u, v, m, p_r, p_u, p_v, p_m, accumulated cost).
OdeVec pack_extended(const ExtendedState& s);
ExtendedState unpack_extended(const OdeVec& y);

/// Right-hand side of the forward extremal system; the steering angle is
/// re-solved by optimal_steering at every derivative evaluation.  `sign` -1
/// gives the touchdown-anchored reverse-time system (all rates negated).
OdeRhs extremal_rhs(const ProblemConfig& cfg, double sign = 1.0);

/// Forward-propagate an extremal over [t0, t1] and assemble a Trajectory
/// (beta, H, and the penalty value re-derived at every node).
Trajectory propagate(const ExtendedState& start, double t0, double t1,
                     const IntegratorSettings& settings, const ProblemConfig& cfg);

/// Event wrapper over State for extremal propagation.
struct StateEvent {
  std::function<double(const State&)> value;
  int direction = 0;
  std::function<double(const State&)> slope;  ///< optional
  double grazing_tol = 0;
};

/// Altitude-threshold event (r - 1 - altitude = 0) with the exact slope v;
/// grazing-tolerant so a soft touchdown (v -> 0 exactly at the surface) is
/// still located sharply in time.
StateEvent altitude_event(double altitude, int direction, double grazing_tol = 1.0e-9);

/// Forward-propagate until the event triggers, at most until t_max.  The
/// final node is the located event point; an untriggered event yields status
/// Timeout with the partial trajectory.
Trajectory propagate_to_event(const ExtendedState& start, double t0, double t_max,
                              const StateEvent& event, const IntegratorSettings& settings,
                              const ProblemConfig& cfg);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// CSV with header t,r,u,v,m,pr,pu,pv,pm,beta,H,delta_term; nondimensional
/// values at 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace pdg
