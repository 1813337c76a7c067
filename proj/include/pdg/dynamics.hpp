#pragma once

#include "pdg/core.hpp"

#include <Eigen/Dense>

namespace pdg {

/// State + costate + accumulated running cost: the quantities carried by the
/// extremal integrator.
struct ExtendedState {
  State x;
  Costate p;
  double accumulated_cost = 0;
};

/// Time derivative of an ExtendedState at fixed steering angle.
struct Derivative {
  Eigen::Vector4d dx;
  Eigen::Vector4d dp;
  double dcost = 0;
};

/// Value and radial derivative of the vertical-landing penalty
///   0.5 * delta * exp(1-r) * (beta - pi/2)^2 / (r - 1 + eps).
/// Shared by the running cost, the Hamiltonian, and the adjoint rate so the
/// three can never drift apart.
struct PenaltyTerm {
  double value = 0;
  double d_dr = 0;
};

PenaltyTerm penalty(double r, double beta, const RegularizationConfig& reg);

/// Penalty value only.  Nonnegative for r >= 1.
double regularization_term(double r, double beta, const RegularizationConfig& reg);

/// Rates of (r, u, v, m) under gravity plus constant thrust at angle beta.
Eigen::Vector4d state_rhs(const State& x, double beta, const ProblemConfig& cfg);

/// Control Hamiltonian of the penalty-augmented time-optimal problem.
double hamiltonian(const State& x, const Costate& p, double beta, const ProblemConfig& cfg);

/// Adjoint rates: minus the state gradient of the Hamiltonian at fixed beta.
Eigen::Vector4d costate_rhs(const State& x, const Costate& p, double beta,
                            const ProblemConfig& cfg);

/// Full forward rate of the extremal system at fixed beta; the running cost
/// accumulates 1 + penalty.
Derivative augmented_rhs(const ExtendedState& s, double beta, const ProblemConfig& cfg);

}  // namespace pdg
