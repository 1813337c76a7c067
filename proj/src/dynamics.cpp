#include "pdg/dynamics.hpp"

#include <cmath>

namespace pdg {

static constexpr double kHalfPi = 1.5707963267948966;

PenaltyTerm penalty(double r, double beta, const RegularizationConfig& reg) {
  if (reg.delta == 0.0) return {0.0, 0.0};
  // Guarded denominator: transient solver iterates may dip below the surface,
  // where the raw expression changes sign.  Flooring r-1 at -eps/2 keeps the
  // term positive and smooth everywhere a converged trajectory can live
  // (touchdown itself sits at r-1 = 0, above the floor).
  const double raw = r - 1.0;
  const bool clamped = raw < -0.5 * reg.epsilon;
  const double s = (clamped ? -0.5 * reg.epsilon : raw) + reg.epsilon;
  const double dev = beta - kHalfPi;
  const double core = 0.5 * reg.delta * std::exp(1.0 - r) * dev * dev;
  PenaltyTerm out;
  out.value = core / s;
  out.d_dr = clamped ? -out.value : -core * (s + 1.0) / (s * s);
  return out;
}

double regularization_term(double r, double beta, const RegularizationConfig& reg) {
  return penalty(r, beta, reg).value;
}

Eigen::Vector4d state_rhs(const State& x, double beta, const ProblemConfig& cfg) {
  const double acc = cfg.thrust / x.m;
  const double sb = std::sin(beta);
  const double cb = std::cos(beta);
  return {x.v,
          -x.u * x.v / x.r + acc * cb,
          x.u * x.u / x.r - cfg.mu / (x.r * x.r) + acc * sb,
          -cfg.mdot};
}

double hamiltonian(const State& x, const Costate& p, double beta, const ProblemConfig& cfg) {
  const Eigen::Vector4d f = state_rhs(x, beta, cfg);
  return p.vec().dot(f) + 1.0 + penalty(x.r, beta, cfg.reg).value;
}

Eigen::Vector4d costate_rhs(const State& x, const Costate& p, double beta,
                            const ProblemConfig& cfg) {
  const double r2 = x.r * x.r;
  const double acc_m2 = cfg.thrust / (x.m * x.m);
  const double sb = std::sin(beta);
  const double cb = std::cos(beta);
  const double dpen_dr = penalty(x.r, beta, cfg.reg).d_dr;
  return {(p.p_v * x.u * x.u - p.p_u * x.u * x.v) / r2 - 2.0 * cfg.mu * p.p_v / (r2 * x.r) -
              dpen_dr,
          (p.p_u * x.v - 2.0 * p.p_v * x.u) / x.r,
          p.p_u * x.u / x.r - p.p_r,
          acc_m2 * (p.p_u * cb + p.p_v * sb)};
}

Derivative augmented_rhs(const ExtendedState& s, double beta, const ProblemConfig& cfg) {
  Derivative d;
  d.dx = state_rhs(s.x, beta, cfg);
  d.dp = costate_rhs(s.x, s.p, beta, cfg);
  d.dcost = 1.0 + penalty(s.x.r, beta, cfg.reg).value;
  return d;
}

}  // namespace pdg
