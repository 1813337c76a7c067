#include "pdg/odeint.hpp"

#include "pdg/steering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace pdg {

void IntegratorSettings::validate() const {
  if (!(rel_tol > 0) || !(abs_tol > 0) || rel_tol > 1e-2 || abs_tol > 1e-2) {
    throw ConfigError("integrator tolerances must lie in (0, 1e-2]");
  }
  if (max_step < 0 || dense_output_dt < 0) {
    throw ConfigError("integrator max_step and dense_output_dt must be nonnegative");
  }
}

const char* to_string(TerminationStatus s) {
  switch (s) {
    case TerminationStatus::ReachedEnd: return "reached_end";
    case TerminationStatus::EventTriggered: return "event";
    case TerminationStatus::Timeout: return "timeout";
    case TerminationStatus::StepFailure: return "step_failure";
  }
  return "unknown";
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
// Difference between the 5th- and embedded 4th-order weights.
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
// Dense-output weights of the fourth-order continuous extension.
constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kPiBeta = 0.04;             // PI controller integral gain
constexpr double kExpo1 = 0.2 - kPiBeta * 0.75;
constexpr double kMaxShrink = 5.0;           // step shrinks at most /5 per retry
constexpr double kMaxGrow = 10.0;            // step grows at most x10
constexpr long kStepBudget = 5'000'000;
constexpr double kEventValueTol = 1.0e-10;

struct DenseStep {
  double t = 0, h = 0;
  OdeVec c1, c2, c3, c4, c5;

  OdeVec eval(double time) const {
    const double th = (time - t) / h;
    const double th1 = 1.0 - th;
    return c1 + th * (c2 + th1 * (c3 + th * (c4 + th1 * c5)));
  }
};

bool finite(const OdeVec& v) { return v.allFinite(); }

double error_norm(const OdeVec& err, const OdeVec& y0, const OdeVec& y1, double atol,
                  double rtol) {
  double acc = 0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

IntegrationResult integrate(const OdeRhs& rhs, double t0, double t1, const OdeVec& y0,
                            const IntegratorSettings& settings,
                            const std::vector<OdeEvent>& events) {
  settings.validate();
  IntegrationResult out;
  out.end_state = y0;
  out.end_time = t0;
  if (!(t1 > t0)) throw ConfigError("integrate: t1 must exceed t0");
  if (!finite(y0)) throw NumericalError("integrate: non-finite initial state");

  const double span = t1 - t0;
  const double hmax = settings.max_step > 0 ? std::min(settings.max_step, span) : span;
  const double emit_dt = settings.dense_output_dt > 0 ? settings.dense_output_dt : span / 200.0;

  const int n = static_cast<int>(y0.size());
  OdeVec y = y0, ynew(n), ytmp(n), yerr(n);
  OdeVec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  auto eval = [&](double t, const OdeVec& yy, OdeVec& dy) -> bool {
    try {
      rhs(t, yy, dy);
    } catch (const std::exception& e) {
      out.message = e.what();
      return false;
    }
    return finite(dy);
  };

  // Immediate-trigger check: an event already satisfied at the start yields a
  // zero-length result.
  for (std::size_t ie = 0; ie < events.size(); ++ie) {
    const double g = events[ie].value(t0, y);
    const bool hit = (events[ie].direction < 0 && g <= 0) ||
                     (events[ie].direction > 0 && g >= 0) ||
                     (events[ie].direction == 0 && g == 0);
    if (hit) {
      out.times.push_back(t0);
      out.states.push_back(y);
      out.status = TerminationStatus::EventTriggered;
      out.triggered_event = static_cast<int>(ie);
      out.end_time = t0;
      out.end_state = y;
      return out;
    }
  }

  if (!eval(t0, y, k1)) {
    out.status = TerminationStatus::StepFailure;
    return out;
  }

  // Starting step size: curvature probe in the scaled norm.
  double h;
  {
    double d0 = 0, d1 = 0;
    for (int i = 0; i < n; ++i) {
      const double sc = settings.abs_tol + settings.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);
    ytmp = y + h0 * k1;
    double h1 = h0;
    if (eval(t0 + h0, ytmp, k2)) {
      double d2 = 0;
      for (int i = 0; i < n; ++i) {
        const double sc = settings.abs_tol + settings.rel_tol * std::abs(y[i]);
        const double q = (k2[i] - k1[i]) / sc;
        d2 += q * q;
      }
      d2 = std::sqrt(d2 / n) / h0;
      const double dm = std::max(d1, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    }
    h = std::min({100.0 * h0, h1, hmax});
  }

  out.times.push_back(t0);
  out.states.push_back(y);
  double next_emit = t0 + emit_dt;

  double t = t0;
  double facold = 1e-4;
  bool last_rejected = false;
  DenseStep dense;
  bool dense_ready = false;

  auto make_dense = [&]() {
    if (dense_ready) return;
    dense.t = t;
    dense.h = h;
    dense.c1 = y;
    dense.c2 = ynew - y;
    dense.c3 = h * k1 - dense.c2;
    dense.c4 = dense.c2 - h * k7 - dense.c3;
    dense.c5 = h * (kD1 * k1 + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 + kD7 * k7);
    dense_ready = true;
  };

  while (t < t1) {
    if (out.accepted_steps + out.rejected_steps > kStepBudget) {
      out.status = TerminationStatus::StepFailure;
      out.message = "step budget exhausted";
      out.end_time = t;
      out.end_state = y;
      return out;
    }
    const double hmin = 1e-14 * std::max({1.0, std::abs(t), std::abs(t1)});
    if (t1 - t < hmin) break;  // the remaining sliver is below time resolution
    if (h < hmin) {
      out.status = TerminationStatus::StepFailure;
      if (out.message.empty()) out.message = "step size underflow";
      out.end_time = t;
      out.end_state = y;
      return out;
    }
    if (t + h > t1) h = t1 - t;
    // Avoid a microscopic final sliver.
    if (t + 1.01 * h >= t1) h = t1 - t;

    bool ok = true;
    ytmp = y + h * (kA21 * k1);
    ok = ok && eval(t + kC2 * h, ytmp, k2);
    if (ok) {
      ytmp = y + h * (kA31 * k1 + kA32 * k2);
      ok = eval(t + kC3 * h, ytmp, k3);
    }
    if (ok) {
      ytmp = y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3);
      ok = eval(t + kC4 * h, ytmp, k4);
    }
    if (ok) {
      ytmp = y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4);
      ok = eval(t + kC5 * h, ytmp, k5);
    }
    if (ok) {
      ytmp = y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
      ok = eval(t + h, ytmp, k6);
    }
    if (ok) {
      ynew = y + h * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
      ok = eval(t + h, ynew, k7) && finite(ynew);
    }

    double err = 1e10;
    if (ok) {
      yerr = h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
      err = error_norm(yerr, y, ynew, settings.abs_tol, settings.rel_tol);
      if (!std::isfinite(err)) err = 1e10;
    }

    if (err > 1.0) {
      const double fac11 = std::pow(std::max(err, 1e-10), kExpo1);
      h /= std::min(kMaxShrink, fac11 / kSafety);
      ++out.rejected_steps;
      last_rejected = true;
      continue;
    }

    // Accepted.
    ++out.accepted_steps;
    dense_ready = false;
    const double tnew = t + h;

    // Event scan over [t, tnew].
    double hit_time = tnew + 1;
    int hit_index = -1;
    OdeVec hit_state;
    for (std::size_t ie = 0; ie < events.size(); ++ie) {
      const OdeEvent& ev = events[ie];
      const double g0 = ev.value(t, y);
      const double g1 = ev.value(tnew, ynew);
      const bool down = ev.direction <= 0 && g0 > 0 && g1 <= 0;
      const bool up = ev.direction >= 0 && g0 < 0 && g1 >= 0;
      double te = tnew + 1;
      OdeVec ye;
      if (down || up) {
        make_dense();
        double lo = t, hi = tnew, glo = g0;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          const double gm = ev.value(mid, dense.eval(mid));
          if (std::abs(gm) < kEventValueTol) {
            lo = hi = mid;
            break;
          }
          if ((glo > 0) == (gm > 0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
        }
        te = 0.5 * (lo + hi);
        ye = dense.eval(te);
      } else if (ev.slope && ev.grazing_tol > 0) {
        // Tangential contact: locate the extremum of g through its slope and
        // accept if g is within tolerance there.
        const double s0 = ev.slope(t, y);
        const double s1 = ev.slope(tnew, ynew);
        const bool min_pass = ev.direction <= 0 && s0 < 0 && s1 >= 0;
        const bool max_pass = ev.direction >= 0 && s0 > 0 && s1 <= 0;
        if (min_pass || max_pass) {
          make_dense();
          double lo = t, hi = tnew, slo = s0;
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double sm = ev.slope(mid, dense.eval(mid));
            if ((slo > 0) == (sm > 0)) {
              lo = mid;
              slo = sm;
            } else {
              hi = mid;
            }
          }
          const double tx = 0.5 * (lo + hi);
          const OdeVec yx = dense.eval(tx);
          const double gx = ev.value(tx, yx);
          if ((min_pass && gx <= ev.grazing_tol) || (max_pass && gx >= -ev.grazing_tol)) {
            te = tx;
            ye = yx;
          }
        }
      }
      if (te < hit_time) {
        hit_time = te;
        hit_index = static_cast<int>(ie);
        hit_state = ye;
      }
    }

    const bool triggered = hit_index >= 0;
    const double t_stop = triggered ? hit_time : tnew;

    // Emit dense-grid samples inside the step, then the step end.
    while (next_emit < t_stop - 1e-14 * std::max(1.0, std::abs(t_stop))) {
      if (next_emit > t) {
        make_dense();
        out.times.push_back(next_emit);
        out.states.push_back(dense.eval(next_emit));
      }
      next_emit += emit_dt;
    }
    if (triggered) {
      out.times.push_back(hit_time);
      out.states.push_back(hit_state);
      out.status = TerminationStatus::EventTriggered;
      out.triggered_event = hit_index;
      out.end_time = hit_time;
      out.end_state = out.states.back();
      return out;
    }
    out.times.push_back(tnew);
    out.states.push_back(ynew);
    if (std::abs(next_emit - tnew) <= 1e-14 * std::max(1.0, std::abs(tnew))) {
      next_emit += emit_dt;
    }

    // PI step-size update.
    const double fac11 = std::pow(std::max(err, 1e-10), kExpo1);
    double fac = fac11 / std::pow(facold, kPiBeta);
    fac = std::max(1.0 / kMaxGrow, std::min(kMaxShrink, fac / kSafety));
    double hnew = h / fac;
    if (last_rejected) hnew = std::min(hnew, h);
    last_rejected = false;
    facold = std::max(err, 1e-4);

    t = tnew;
    y.swap(ynew);
    k1.swap(k7);  // first-same-as-last
    h = std::min(hnew, hmax);
  }

  out.end_time = t;
  out.end_state = y;
  out.status = events.empty() ? TerminationStatus::ReachedEnd : TerminationStatus::Timeout;
  return out;
}

// ---------------------------------------------------------------------------
// Extremal propagation
// ---------------------------------------------------------------------------

OdeVec pack_extended(const ExtendedState& s) {
  OdeVec y(9);
  y << s.x.r, s.x.u, s.x.v, s.x.m, s.p.p_r, s.p.p_u, s.p.p_v, s.p.p_m, s.accumulated_cost;
  return y;
}

ExtendedState unpack_extended(const OdeVec& y) {
  ExtendedState s;
  s.x = {y[0], y[1], y[2], y[3]};
  s.p = {y[4], y[5], y[6], y[7]};
  s.accumulated_cost = y[8];
  return s;
}

OdeRhs extremal_rhs(const ProblemConfig& cfg, double sign) {
  return [cfg, sign](double, const OdeVec& y, OdeVec& dy) {
    const ExtendedState s = unpack_extended(y);
    const double beta = optimal_steering(s.x, s.p, cfg).beta;
    const Derivative d = augmented_rhs(s, beta, cfg);
    dy.resize(9);
    dy << d.dx[0], d.dx[1], d.dx[2], d.dx[3], d.dp[0], d.dp[1], d.dp[2], d.dp[3], d.dcost;
    dy *= sign;
  };
}

namespace {

Trajectory assemble(const IntegrationResult& res, const ProblemConfig& cfg) {
  Trajectory traj;
  traj.nodes.reserve(res.times.size());
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const ExtendedState s = unpack_extended(res.states[i]);
    TrajectoryNode node;
    node.t = res.times[i];
    node.x = s.x;
    node.p = s.p;
    node.beta = optimal_steering(s.x, s.p, cfg).beta;
    node.hamiltonian = hamiltonian(s.x, s.p, node.beta, cfg);
    node.delta_term = regularization_term(s.x.r, node.beta, cfg.reg);
    traj.nodes.push_back(node);
  }
  traj.meta.status = res.status;
  traj.meta.final_time = res.end_time;
  if (!traj.nodes.empty()) {
    const TrajectoryNode& last = traj.nodes.back();
    traj.meta.p_r0 = last.p.p_r;
    traj.meta.p_u0 = last.p.p_u;
    traj.meta.p_v0 = last.p.p_v;
  }
  return traj;
}

}  // namespace

Trajectory propagate(const ExtendedState& start, double t0, double t1,
                     const IntegratorSettings& settings, const ProblemConfig& cfg) {
  const IntegrationResult res = integrate(extremal_rhs(cfg), t0, t1, pack_extended(start),
                                          settings);
  if (res.status == TerminationStatus::StepFailure) {
    throw NumericalError("extremal propagation failed: " +
                         (res.message.empty() ? "step failure" : res.message));
  }
  return assemble(res, cfg);
}

StateEvent altitude_event(double altitude, int direction, double grazing_tol) {
  StateEvent e;
  e.value = [altitude](const State& x) { return x.r - 1.0 - altitude; };
  e.direction = direction;
  e.slope = [](const State& x) { return x.v; };
  e.grazing_tol = grazing_tol;
  return e;
}

Trajectory propagate_to_event(const ExtendedState& start, double t0, double t_max,
                              const StateEvent& event, const IntegratorSettings& settings,
                              const ProblemConfig& cfg) {
  OdeEvent ev;
  ev.value = [&event](double, const OdeVec& y) { return event.value(unpack_extended(y).x); };
  ev.direction = event.direction;
  if (event.slope) {
    ev.slope = [&event](double, const OdeVec& y) { return event.slope(unpack_extended(y).x); };
  }
  ev.grazing_tol = event.grazing_tol;

  const IntegrationResult res =
      integrate(extremal_rhs(cfg), t0, t_max, pack_extended(start), settings, {ev});
  if (res.status == TerminationStatus::StepFailure) {
    throw NumericalError("extremal propagation failed: " +
                         (res.message.empty() ? "step failure" : res.message));
  }
  return assemble(res, cfg);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

static const char kCsvHeader[] = "t,r,u,v,m,pr,pu,pv,pm,beta,H,delta_term";

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream ss;
  ss << kCsvHeader << "\n";
  for (const TrajectoryNode& n : traj.nodes) {
    ss << format_g17(n.t) << ',' << format_g17(n.x.r) << ',' << format_g17(n.x.u) << ','
       << format_g17(n.x.v) << ',' << format_g17(n.x.m) << ',' << format_g17(n.p.p_r) << ','
       << format_g17(n.p.p_u) << ',' << format_g17(n.p.p_v) << ',' << format_g17(n.p.p_m) << ','
       << format_g17(n.beta) << ',' << format_g17(n.hamiltonian) << ','
       << format_g17(n.delta_term) << "\n";
  }
  return ss.str();
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  write_text_file(path, trajectory_to_csv(traj));
}

Trajectory read_trajectory_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("trajectory CSV header mismatch in " + path);
  }
  Trajectory traj;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double vals[12];
    const char* s = line.c_str();
    char* end = nullptr;
    for (int i = 0; i < 12; ++i) {
      vals[i] = std::strtod(s, &end);
      if (end == s) {
        throw ConfigError("trajectory CSV parse error at line " + std::to_string(lineno) +
                          " in " + path);
      }
      s = end;
      if (i < 11) {
        if (*s != ',') {
          throw ConfigError("trajectory CSV expects 12 columns at line " +
                            std::to_string(lineno) + " in " + path);
        }
        ++s;
      }
    }
    TrajectoryNode n;
    n.t = vals[0];
    n.x = {vals[1], vals[2], vals[3], vals[4]};
    n.p = {vals[5], vals[6], vals[7], vals[8]};
    n.beta = vals[9];
    n.hamiltonian = vals[10];
    n.delta_term = vals[11];
    traj.nodes.push_back(n);
  }
  if (!traj.nodes.empty()) {
    traj.meta.final_time = traj.nodes.back().t;
    traj.meta.p_r0 = traj.nodes.back().p.p_r;
    traj.meta.p_u0 = traj.nodes.back().p.p_u;
    traj.meta.p_v0 = traj.nodes.back().p.p_v;
  }
  return traj;
}

}  // namespace pdg
