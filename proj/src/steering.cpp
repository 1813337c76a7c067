#include "pdg/steering.hpp"

#include "pdg/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace pdg {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kHalfPi = 1.5707963267948966;

// Width goal for the bisection bracket and the residual magnitude accepted at
// the returned angle.  The residual check keeps the result meaningful even
// where the penalty slope is steep (near the surface the angle gain reaches
// delta/eps).
constexpr double kBracketTol = 1.0e-12;
constexpr double kResidualTol = 5.0e-11;
constexpr int kMaxBisect = 200;

double wrap_angle(double b) {
  double w = std::fmod(b, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w = 0;
  return w;
}

// Coefficient k of the penalty contribution k*(beta - pi/2) to the residual.
// Shares the guarded denominator with pdg::penalty.
double angle_gain(double r, const RegularizationConfig& reg) {
  if (reg.delta == 0.0) return 0.0;
  const double raw = r - 1.0;
  const double s = (raw < -0.5 * reg.epsilon ? -0.5 * reg.epsilon : raw) + reg.epsilon;
  return reg.delta * std::exp(1.0 - r) / s;
}

struct ResidualFn {
  double c_t;  // thrust acceleration T/m
  double p_u;
  double p_v;
  double k;

  double operator()(double beta) const {
    return c_t * (-p_u * std::sin(beta) + p_v * std::cos(beta)) + k * (beta - kHalfPi);
  }
};

double bisect_zero(const ResidualFn& f, double lo, double hi, double flo) {
  for (int i = 0; i < kMaxBisect; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted in double precision
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((flo < 0) == (fm < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < kBracketTol && std::abs(f(0.5 * (lo + hi))) < kResidualTol) break;
  }
  return 0.5 * (lo + hi);
}

void push_unique(std::vector<double>& v, double b, double tol) {
  for (double x : v) {
    if (std::abs(x - b) < tol) return;
  }
  v.push_back(b);
}

}  // namespace

double stationarity_residual(const State& x, const Costate& p, double beta,
                             const ProblemConfig& cfg) {
  ResidualFn f{cfg.thrust / x.m, p.p_u, p.p_v, angle_gain(x.r, cfg.reg)};
  return f(beta);
}

std::vector<double> critical_angles(const State& x, const Costate& p, const ProblemConfig& cfg) {
  const double c_t = cfg.thrust / x.m;
  const double k = angle_gain(x.r, cfg.reg);
  // Residual derivative in the tangent half-angle t = tan(beta/2):
  //   (k + p_u c_t) t^2 - 2 p_v c_t t + (k - p_u c_t) = 0.
  const double a = k + p.p_u * c_t;
  const double b = -2.0 * p.p_v * c_t;
  const double c = k - p.p_u * c_t;

  std::vector<double> out;
  if (std::abs(a) < 1.0e-14) {
    // Leading coefficient vanished: one root escaped to t -> inf (beta = pi);
    // the remainder is linear.
    if (std::abs(b) > 0) push_unique(out, wrap_angle(2.0 * std::atan(-c / b)), 1e-13);
    push_unique(out, kPi, 1e-13);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
      double t1, t2;
      if (q != 0) {
        t1 = q / a;
        t2 = c / q;
      } else {
        t1 = t2 = 0.0;  // b = 0 and disc = 0 force c = 0: double root at t = 0
      }
      push_unique(out, wrap_angle(2.0 * std::atan(t1)), 1e-13);
      push_unique(out, wrap_angle(2.0 * std::atan(t2)), 1e-13);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SteeringSolution optimal_steering(const State& x, const Costate& p, const ProblemConfig& cfg) {
  const double c_t = cfg.thrust / x.m;
  const double k = angle_gain(x.r, cfg.reg);
  const ResidualFn f{c_t, p.p_u, p.p_v, k};

  if (k == 0.0 && p.p_u == 0.0 && p.p_v == 0.0) {
    throw SteeringError("steering undefined: zero primer vector and no active penalty");
  }

  std::vector<double> zeros;
  if (k == 0.0) {
    // Pure primer case: the residual is a single sinusoid with exact zeros.
    const double b0 = wrap_angle(std::atan2(p.p_v, p.p_u));
    push_unique(zeros, b0, 1e-12);
    push_unique(zeros, wrap_angle(b0 + kPi), 1e-12);
  } else {
    std::vector<double> brk = critical_angles(x, p, cfg);
    brk.insert(brk.begin(), 0.0);
    brk.push_back(kTwoPi);
    std::sort(brk.begin(), brk.end());

    std::vector<double> fs(brk.size());
    for (std::size_t i = 0; i < brk.size(); ++i) fs[i] = f(brk[i]);

    for (std::size_t i = 0; i < brk.size(); ++i) {
      // Tangencies count as zeros when the residual is already tiny.
      if (std::abs(fs[i]) < 1.0e-10) push_unique(zeros, wrap_angle(brk[i]), 1e-9);
    }
    for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
      if (brk[i + 1] - brk[i] < 1e-13) continue;
      if ((fs[i] < 0) != (fs[i + 1] < 0) && fs[i] != 0 && fs[i + 1] != 0) {
        push_unique(zeros, wrap_angle(bisect_zero(f, brk[i], brk[i + 1], fs[i])), 1e-9);
      }
    }
  }

  if (zeros.empty()) {
    throw SteeringError("no stationary steering angle on [0, 2*pi)");
  }
  std::sort(zeros.begin(), zeros.end());

  SteeringSolution sol;
  sol.candidates = zeros;
  double best_h = 0;
  bool have = false;
  for (double b : zeros) {
    const double h = hamiltonian(x, p, b, cfg);
    const bool better =
        !have || h < best_h - 1.0e-12 ||
        (std::abs(h - best_h) <= 1.0e-12 &&
         std::abs(b - kHalfPi) < std::abs(sol.beta - kHalfPi));
    if (better) {
      sol.beta = b;
      best_h = std::min(h, have ? best_h : h);
      have = true;
    }
  }
  sol.residual = f(sol.beta);
  sol.hamiltonian_value = hamiltonian(x, p, sol.beta, cfg);
  return sol;
}

}  // namespace pdg
