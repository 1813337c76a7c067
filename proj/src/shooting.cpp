#include "pdg/shooting.hpp"

#include "pdg/steering.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pdg {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

namespace {

constexpr double kMinFlightTime = 1.0e-4;

Vec5 pack_guess(const ShootingGuess& g) {
  Vec5 q;
  q << g.p0.p_r, g.p0.p_u, g.p0.p_v, g.p0.p_m, g.tf;
  return q;
}

ShootingGuess unpack_guess(const Vec5& q) {
  return {Costate{q[0], q[1], q[2], q[3]}, q[4]};
}

IntegratorSettings residual_settings(const IntegratorSettings& s, double tf) {
  IntegratorSettings out = s;
  out.dense_output_dt = tf;  // endpoints only; no dense grid needed
  return out;
}

}  // namespace

ResidualEval shooting_residual(const State& x0, const ShootingGuess& guess,
                               const ProblemConfig& cfg, const IntegratorSettings& settings) {
  ResidualEval out;
  if (!(guess.tf > kMinFlightTime) || !std::isfinite(guess.tf)) return out;
  ExtendedState start{x0, guess.p0, 0.0};
  IntegrationResult res;
  try {
    res = integrate(extremal_rhs(cfg), 0.0, guess.tf, pack_extended(start),
                    residual_settings(settings, guess.tf));
  } catch (const std::exception&) {
    return out;
  }
  if (res.status != TerminationStatus::ReachedEnd) return out;
  const ExtendedState end = unpack_extended(res.end_state);
  double h_end;
  try {
    const SteeringSolution sol = optimal_steering(end.x, end.p, cfg);
    h_end = hamiltonian(end.x, end.p, sol.beta, cfg);
  } catch (const std::exception&) {
    return out;
  }
  out.psi << end.x.r - 1.0, end.x.u, end.x.v, end.p.p_m, h_end;
  out.ok = out.psi.allFinite();
  out.terminal = end;
  return out;
}

ShootingResult solve_tpbvp(const State& x0, const ShootingGuess& guess, const ProblemConfig& cfg,
                           const IntegratorSettings& settings, const ShootingOptions& opts) {
  ShootingResult result;
  result.delta = cfg.reg.delta;
  Vec5 q = pack_guess(guess);

  ResidualEval cur = shooting_residual(x0, unpack_guess(q), cfg, settings);
  if (!cur.ok) {
    result.message = "defect not evaluable at the initial guess";
    result.solution = unpack_guess(q);
    return result;
  }

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter;
    const double norm_inf = cur.psi.cwiseAbs().maxCoeff();
    result.residual_norm = norm_inf;
    if (log_level() >= LogLevel::Debug) {
      std::ostringstream os;
      os << "newton iter " << iter << " |psi|=" << norm_inf << " psi=[";
      for (int i = 0; i < 5; ++i) os << (i ? "," : "") << cur.psi[i];
      os << "] q=[";
      for (int i = 0; i < 5; ++i) os << (i ? "," : "") << q[i];
      os << "]";
      log_debug(os.str());
    }
    if (norm_inf < opts.tolerance) {
      result.converged = true;
      result.solution = unpack_guess(q);
      // Full resample for the caller: dense nodes plus step endpoints.
      ExtendedState start{x0, result.solution.p0, 0.0};
      result.trajectory = propagate(start, 0.0, result.solution.tf, settings, cfg);
      result.trajectory.meta.final_time = result.solution.tf;
      return result;
    }

    // Forward-difference Jacobian, column by column.  Near a tangential
    // touchdown the defect map's curvature makes the one-sided secant drift
    // by a few percent, which is enough to turn the Newton step into an
    // ascent direction once the defect is small; when the line search fails
    // we rebuild the Jacobian with central differences and try once more.
    bool accepted = false;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      const bool central = pass == 1;
      Mat5 jac;
      bool jac_ok = true;
      for (int i = 0; i < 5 && jac_ok; ++i) {
        double h = opts.fd_step * std::max(1.0, std::abs(q[i]));
        if (central) h *= 10.0;
        Vec5 qp = q;
        qp[i] += h;
        ResidualEval pert = shooting_residual(x0, unpack_guess(qp), cfg, settings);
        if (!pert.ok && !central) {
          // One retry with a much smaller probe before giving up.
          h *= 0.125;
          qp = q;
          qp[i] += h;
          pert = shooting_residual(x0, unpack_guess(qp), cfg, settings);
        }
        if (!pert.ok) {
          jac_ok = false;
          break;
        }
        if (central) {
          Vec5 qm = q;
          qm[i] -= h;
          const ResidualEval pert_m = shooting_residual(x0, unpack_guess(qm), cfg, settings);
          if (!pert_m.ok) {
            jac_ok = false;
            break;
          }
          jac.col(i) = (pert.psi - pert_m.psi) / (2.0 * h);
        } else {
          jac.col(i) = (pert.psi - cur.psi) / h;
        }
      }
      if (!jac_ok) {
        if (central) break;
        result.message = "Jacobian column not evaluable";
        result.solution = unpack_guess(q);
        return result;
      }

      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double smax = svd.singularValues()(0);
      const double smin = svd.singularValues()(4);
      if (!(smin > 0) || smax / smin > opts.singular_threshold) {
        if (central) break;
        result.message = "singular Jacobian";
        result.solution = unpack_guess(q);
        return result;
      }
      const Vec5 step = svd.solve(-cur.psi);

      // Backtracking on the defect norm.
      const double base_norm = cur.psi.norm();
      double lambda = 1.0;
      for (int half = 0; half <= opts.max_halvings; ++half) {
        const Vec5 trial = q + lambda * step;
        const ResidualEval eval = shooting_residual(x0, unpack_guess(trial), cfg, settings);
        if (eval.ok && eval.psi.norm() <= (1.0 - 1.0e-4 * lambda) * base_norm) {
          q = trial;
          cur = eval;
          accepted = true;
          break;
        }
        if (log_level() >= LogLevel::Debug) {
          std::ostringstream os;
          os << "  reject" << (central ? " (central)" : "") << " lambda=" << lambda
             << " trial|psi|="
             << (eval.ok ? eval.psi.norm() : std::numeric_limits<double>::quiet_NaN())
             << " base=" << base_norm;
          log_debug(os.str());
        }
        lambda *= 0.5;
      }
    }
    if (!accepted) {
      result.message = "line search stalled";
      result.solution = unpack_guess(q);
      return result;
    }
  }

  result.message = "iteration limit reached";
  result.solution = unpack_guess(q);
  result.residual_norm = cur.psi.cwiseAbs().maxCoeff();
  result.iterations = opts.max_iterations;
  return result;
}

std::vector<double> uniform_delta_schedule(double target, int steps) {
  std::vector<double> out;
  if (steps < 1 || target == 0.0) {
    out.push_back(0.0);
    if (target != 0.0) out.push_back(target);
    return out;
  }
  for (int i = 0; i <= steps; ++i) {
    out.push_back(target * static_cast<double>(i) / steps);
  }
  return out;
}

namespace {

bool solve_stage(const State& x0, ShootingGuess& guess, double prev_delta, double delta,
                 bool is_final, const ProblemConfig& cfg, const IntegratorSettings& settings,
                 const ShootingOptions& opts, int depth, int max_depth,
                 std::vector<ShootingResult>& results) {
  ShootingResult r = solve_tpbvp(x0, guess, cfg.with_delta(delta), settings, opts);
  if (r.converged) {
    guess = r.solution;
    results.push_back(std::move(r));
    return true;
  }
  if (!is_final && r.residual_norm < opts.stall_carry_tol) {
    // Close enough to serve as the next stage's warm start; an intermediate
    // stage is scaffolding, only the final one must meet full tolerance.
    log_info("continuation stage delta=" + format_g17(delta) + " carried unconverged (|psi|=" +
             format_g17(r.residual_norm) + ")");
    guess = r.solution;
    results.push_back(std::move(r));
    return true;
  }
  if (depth >= max_depth) {
    results.push_back(std::move(r));
    return false;
  }
  const double mid = 0.5 * (prev_delta + delta);
  log_debug("homotopy stage failed; bisecting toward delta=" + format_g17(mid));
  if (!solve_stage(x0, guess, prev_delta, mid, false, cfg, settings, opts, depth + 1, max_depth,
                   results)) {
    return false;
  }
  return solve_stage(x0, guess, mid, delta, is_final, cfg, settings, opts, depth + 1, max_depth,
                     results);
}

}  // namespace

std::vector<ShootingResult> homotopy_delta(const State& x0, const ShootingGuess& guess,
                                           const std::vector<double>& deltas,
                                           const ProblemConfig& cfg,
                                           const IntegratorSettings& settings,
                                           const ShootingOptions& opts, int max_bisect_depth) {
  std::vector<ShootingResult> results;
  if (deltas.empty()) return results;

  ShootingGuess cur = guess;
  ShootingResult first = solve_tpbvp(x0, cur, cfg.with_delta(deltas.front()), settings, opts);
  const bool first_ok = first.converged;
  if (first_ok) cur = first.solution;
  results.push_back(std::move(first));
  if (!first_ok) return results;

  double prev = deltas.front();
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    const bool is_final = i + 1 == deltas.size();
    if (!solve_stage(x0, cur, prev, deltas[i], is_final, cfg, settings, opts, 0, max_bisect_depth,
                     results)) {
      break;
    }
    prev = deltas[i];
  }
  return results;
}

std::vector<ShootingGuess> default_guess_grid() {
  const double base[4] = {-1.0, 0.5, -0.5, 0.0};
  const double scales[3] = {1.0, 0.5, 2.0};
  const double tfs[3] = {0.5, 0.3, 0.7};
  std::vector<ShootingGuess> grid;
  grid.reserve(3 * 81);
  for (double tf : tfs) {
    for (double s0 : scales) {
      for (double s1 : scales) {
        for (double s2 : scales) {
          for (double s3 : scales) {
            ShootingGuess g;
            g.p0 = {base[0] * s0, base[1] * s1, base[2] * s2, base[3] * s3};
            g.tf = tf;
            grid.push_back(g);
          }
        }
      }
    }
  }
  return grid;
}

ShootingResult solve_from_grid(const State& x0, const ProblemConfig& cfg,
                               const IntegratorSettings& settings, const ShootingOptions& opts) {
  const std::vector<ShootingGuess> grid = default_guess_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ShootingResult r = solve_tpbvp(x0, grid[i], cfg, settings, opts);
    if (r.converged) {
      log_info("cold-start guess " + std::to_string(i) + " converged in " +
               std::to_string(r.iterations) + " iterations");
      return r;
    }
    log_debug("cold-start guess " + std::to_string(i) + " failed: " + r.message);
  }
  throw NumericalError("no cold-start guess converged");
}

}  // namespace pdg
