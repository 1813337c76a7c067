#pragma once

#include "pdg/core.hpp"

#include <stdexcept>
#include <vector>

namespace pdg {

/// The pointwise steering problem has no stationary angle, or the selection
/// is undefined (zero primer vector with no penalty active).
struct SteeringError : NumericalError {
  using NumericalError::NumericalError;
};

/// Result of the pointwise Hamiltonian minimization over the steering angle.
struct SteeringSolution {
  double beta = 0;               ///< selected angle in [0, 2*pi)
  double residual = 0;           ///< stationarity residual at beta
  double hamiltonian_value = 0;  ///< H at beta
  std::vector<double> candidates;  ///< every stationary angle examined
};

/// Derivative of the Hamiltonian with respect to the steering angle:
///   (T/m)(-p_u sin b + p_v cos b) + delta e^(1-r) (b - pi/2)/(r - 1 + eps).
double stationarity_residual(const State& x, const Costate& p, double beta,
                             const ProblemConfig& cfg);

/// Angles in [0, 2*pi) where the residual's own beta-derivative vanishes,
/// found through the tangent half-angle quadratic.  These bracket the
/// residual's sign changes.  Sorted ascending; at most three entries.
std::vector<double> critical_angles(const State& x, const Costate& p, const ProblemConfig& cfg);

/// Globally minimize H over beta in [0, 2*pi): bracket the stationarity
/// residual's zeros between critical angles, bisect each sign change, and
/// pick the zero with the smallest Hamiltonian (ties go to the angle nearest
/// pi/2).  Throws SteeringError if no stationary angle exists.
SteeringSolution optimal_steering(const State& x, const Costate& p, const ProblemConfig& cfg);

}  // namespace pdg
