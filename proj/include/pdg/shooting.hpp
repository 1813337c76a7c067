#pragma once

#include "pdg/core.hpp"
#include "pdg/odeint.hpp"

#include <Eigen/Dense>

#include <vector>

namespace pdg {

/// Unknowns of the landing two-point boundary value problem: initial costate
/// and flight time.
struct ShootingGuess {
  Costate p0;
  double tf = 0;
};

struct ShootingOptions {
  int max_iterations = 100;
  double tolerance = 1.0e-9;        ///< convergence in the max norm
  double fd_step = 1.0e-7;          ///< relative forward-difference step
  int max_halvings = 20;            ///< backtracking line search depth
  double singular_threshold = 1.0e14;
  /// A continuation stage that stalls with a defect below this is still a
  /// useful warm start for the next stage; above it the stage is treated as
  /// missed and bisected.  Small penalty weights floor around 1e-6 (see
  /// homotopy_delta), well under this.
  double stall_carry_tol = 1.0e-4;
};

struct ShootingResult {
  ShootingGuess solution;
  double residual_norm = 0;
  int iterations = 0;
  bool converged = false;
  double delta = 0;                 ///< penalty weight this solve used
  Trajectory trajectory;            ///< fully sampled extremal when converged
  std::string message;
};

/// Terminal defect of a guess: propagate the extremal from the fixed initial
/// state over [0, tf] and report
///   [r(tf) - 1, u(tf), v(tf), p_m(tf), H(tf)].
struct ResidualEval {
  bool ok = false;
  Eigen::Matrix<double, 5, 1> psi;
  ExtendedState terminal;
};

ResidualEval shooting_residual(const State& x0, const ShootingGuess& guess,
                               const ProblemConfig& cfg, const IntegratorSettings& settings);

/// Damped Newton on the 5-dimensional defect with a forward-difference
/// Jacobian and Armijo backtracking.  Non-convergence is reported through the
/// result, not thrown.
ShootingResult solve_tpbvp(const State& x0, const ShootingGuess& guess, const ProblemConfig& cfg,
                           const IntegratorSettings& settings, const ShootingOptions& opts = {});

/// Continuation in the penalty weight: solve the schedule in order, warm-
/// starting each stage from the previous solution.  Near the surface the
/// penalty slope scales like delta/epsilon, which makes the defect map so
/// curved at small weights that finite-difference Newton floors around 1e-6
/// instead of reaching full tolerance; such a stage still lands essentially
/// on its solution, so it is carried forward unconverged (under
/// stall_carry_tol) rather than failed.  A stage that misses by more is
/// bisected toward its predecessor, at most `max_bisect_depth` levels deep.
/// Every attempted stage (scheduled or inserted) appears in the returned
/// list; only the final stage's convergence is load-bearing.
std::vector<ShootingResult> homotopy_delta(const State& x0, const ShootingGuess& guess,
                                           const std::vector<double>& deltas,
                                           const ProblemConfig& cfg,
                                           const IntegratorSettings& settings,
                                           const ShootingOptions& opts = {},
                                           int max_bisect_depth = 5);

/// Uniform homotopy schedule from 0 to `target` in `steps` increments
/// (steps + 1 entries; the default yields a six-point schedule).
std::vector<double> uniform_delta_schedule(double target, int steps = 5);

/// Deterministic cold-start guesses: a sign-pattern seed scaled component-
/// wise over three magnitudes, crossed with three flight-time guesses.
std::vector<ShootingGuess> default_guess_grid();

/// Cold-start solve at the given penalty weight: first converging grid guess
/// wins.  Throws NumericalError if the whole grid fails.
ShootingResult solve_from_grid(const State& x0, const ProblemConfig& cfg,
                               const IntegratorSettings& settings,
                               const ShootingOptions& opts = {});

}  // namespace pdg
