#include "pdg/simulator.hpp"

#include "pdg/dynamics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdg {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegPerRad = 180.0 / kPi;

double clamp_command(double beta, bool& clamped) {
  if (!std::isfinite(beta)) {
    throw NumericalError("simulator: steering command is not finite");
  }
  if (beta < 0) {
    clamped = true;
    return 0;
  }
  if (beta > 2 * kPi) {
    clamped = true;
    return 2 * kPi;
  }
  return beta;
}

OdeRhs fixed_beta_rhs(double beta, const ProblemConfig& cfg) {
  return [beta, cfg](double, const OdeVec& y, OdeVec& dy) {
    const State x{y[0], y[1], y[2], y[3]};
    const Eigen::Vector4d d = state_rhs(x, beta, cfg);
    dy.resize(4);
    dy << d[0], d[1], d[2], d[3];
  };
}

OdeEvent gate_event(double gate) {
  OdeEvent ev;
  ev.value = [gate](double, const OdeVec& y) { return y[0] - 1.0 - gate; };
  ev.direction = -1;
  ev.slope = [](double, const OdeVec& y) { return y[2]; };
  ev.grazing_tol = 1.0e-9;
  return ev;
}

State state_of(const OdeVec& y) { return State{y[0], y[1], y[2], y[3]}; }

}  // namespace

void FlightParams::validate() const {
  if (!(control_dt > 0) || !std::isfinite(control_dt)) {
    throw ConfigError("simulator: control_dt must be positive");
  }
  if (!(t_max > 0) || !std::isfinite(t_max)) {
    throw ConfigError("simulator: t_max must be positive");
  }
  if (!(gate_altitude >= 0) || !std::isfinite(gate_altitude)) {
    throw ConfigError("simulator: gate altitude must be nonnegative");
  }
  integrator.validate();
}

FlightLog fly_closed_loop(const State& x0, const SteeringPolicy& policy,
                          const FlightParams& params, const ProblemConfig& cfg) {
  params.validate();
  FlightLog log;
  log.source = "nn";
  log.initial = x0;

  if (x0.r - 1.0 <= params.gate_altitude) {
    log.terminal = x0;
    log.terminal_time = 0;
    log.terminal_beta = clamp_command(policy(x0), log.clamped);
    log.reached_gate = true;
    return log;
  }

  State x = x0;
  double t = 0;
  IntegratorSettings settings = params.integrator;
  const double tiny = 1.0e-12 * std::max(1.0, params.t_max);
  while (t < params.t_max - tiny) {
    const double beta = clamp_command(policy(x), log.clamped);
    log.samples.push_back(FlightSample{t, x, beta});

    const double t_end = std::min(t + params.control_dt, params.t_max);
    settings.dense_output_dt = t_end - t;  // endpoints only
    OdeVec y0(4);
    y0 << x.r, x.u, x.v, x.m;
    const IntegrationResult res =
        integrate(fixed_beta_rhs(beta, cfg), t, t_end, y0, settings,
                  {gate_event(params.gate_altitude)});
    if (res.status == TerminationStatus::StepFailure) {
      throw NumericalError("simulator: closed-loop step failed" +
                           (res.message.empty() ? "" : ": " + res.message));
    }
    if (res.status == TerminationStatus::EventTriggered) {
      log.terminal = state_of(res.end_state);
      log.terminal_time = res.end_time;
      log.terminal_beta = clamp_command(policy(log.terminal), log.clamped);
      log.reached_gate = true;
      return log;
    }
    t = res.end_time;
    x = state_of(res.end_state);
  }

  log.terminal = x;
  log.terminal_time = t;
  log.terminal_beta = clamp_command(policy(x), log.clamped);
  log.message = "no touchdown within the timeout";
  return log;
}

FlightLog fly_open_loop(const Trajectory& reference, const FlightParams& params,
                        const ProblemConfig& cfg) {
  params.validate();
  if (reference.nodes.size() < 2) {
    throw ConfigError("simulator: reference trajectory needs at least two nodes");
  }
  std::vector<double> times, betas;
  times.reserve(reference.nodes.size());
  betas.reserve(reference.nodes.size());
  for (const TrajectoryNode& n : reference.nodes) {
    times.push_back(n.t);
    betas.push_back(n.beta);
  }
  auto schedule = [times, betas](double t) {
    if (t <= times.front()) return betas.front();
    if (t >= times.back()) return betas.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return betas[i - 1] + w * (betas[i] - betas[i - 1]);
  };

  FlightLog log;
  log.source = "reference";
  log.initial = reference.nodes.front().x;

  if (log.initial.r - 1.0 <= params.gate_altitude) {
    log.terminal = log.initial;
    log.terminal_time = 0;
    log.terminal_beta = schedule(0);
    log.reached_gate = true;
    return log;
  }

  IntegratorSettings settings = params.integrator;
  settings.dense_output_dt = params.control_dt;  // match the closed-loop grid
  OdeVec y0(4);
  y0 << log.initial.r, log.initial.u, log.initial.v, log.initial.m;
  const OdeRhs rhs = [schedule, cfg](double t, const OdeVec& y, OdeVec& dy) {
    const State x{y[0], y[1], y[2], y[3]};
    const Eigen::Vector4d d = state_rhs(x, schedule(t), cfg);
    dy.resize(4);
    dy << d[0], d[1], d[2], d[3];
  };
  const IntegrationResult res =
      integrate(rhs, 0, params.t_max, y0, settings, {gate_event(params.gate_altitude)});
  if (res.status == TerminationStatus::StepFailure) {
    throw NumericalError("simulator: open-loop step failed" +
                         (res.message.empty() ? "" : ": " + res.message));
  }
  for (std::size_t i = 0; i + 1 < res.times.size(); ++i) {
    log.samples.push_back(
        FlightSample{res.times[i], state_of(res.states[i]), schedule(res.times[i])});
  }
  log.terminal = state_of(res.end_state);
  log.terminal_time = res.end_time;
  log.terminal_beta = schedule(res.end_time);
  log.reached_gate = res.status == TerminationStatus::EventTriggered;
  if (!log.reached_gate) log.message = "no touchdown within the timeout";
  return log;
}

namespace {

void append_dimensional_row(std::string& csv, double t, const State& x, double beta,
                            const ScalingSet& sc) {
  csv += format_g17(t * sc.time_unit_s);
  csv += ',';
  csv += format_g17((x.r - 1.0) * sc.length_unit_m);
  csv += ',';
  csv += format_g17(x.u * sc.speed_unit_ms);
  csv += ',';
  csv += format_g17(x.v * sc.speed_unit_ms);
  csv += ',';
  csv += format_g17(x.m * sc.mass_unit_kg);
  csv += ',';
  csv += format_g17(beta * kDegPerRad);
  csv += '\n';
}

}  // namespace

std::string flight_log_csv(const FlightLog& log, const ScalingSet& scaling) {
  std::string csv = "t_s,altitude_m,u_ms,v_ms,mass_kg,beta_deg\n";
  for (const FlightSample& s : log.samples) {
    append_dimensional_row(csv, s.t, s.x, s.beta, scaling);
  }
  append_dimensional_row(csv, log.terminal_time, log.terminal, log.terminal_beta, scaling);
  return csv;
}

std::string terminal_summary_json(const FlightLog& log, const ScalingSet& sc) {
  json j;
  j["source"] = log.source;
  j["reached_gate"] = log.reached_gate;
  j["final_time_s"] = log.terminal_time * sc.time_unit_s;
  j["altitude_m"] = (log.terminal.r - 1.0) * sc.length_unit_m;
  j["u_ms"] = log.terminal.u * sc.speed_unit_ms;
  j["v_ms"] = log.terminal.v * sc.speed_unit_ms;
  j["mass_kg"] = log.terminal.m * sc.mass_unit_kg;
  j["fuel_used_kg"] = (log.initial.m - log.terminal.m) * sc.mass_unit_kg;
  j["beta_deg"] = log.terminal_beta * kDegPerRad;
  j["command_clamped"] = log.clamped;
  if (!log.message.empty()) j["message"] = log.message;
  return j.dump(2) + "\n";
}

ComparisonReport compare_runs(const FlightLog& a, const FlightLog& b, const ScalingSet& sc) {
  ComparisonReport rep;
  const State& ia = a.initial;
  const State& ib = b.initial;
  const double mismatch = std::max({std::abs(ia.r - ib.r), std::abs(ia.u - ib.u),
                                    std::abs(ia.v - ib.v), std::abs(ia.m - ib.m)});
  rep.initial_condition_mismatch = mismatch > 1.0e-9;

  rep.delta_final_time_s = (b.terminal_time - a.terminal_time) * sc.time_unit_s;
  const double fuel_a = (a.initial.m - a.terminal.m) * sc.mass_unit_kg;
  const double fuel_b = (b.initial.m - b.terminal.m) * sc.mass_unit_kg;
  rep.delta_fuel_kg = fuel_b - fuel_a;
  rep.delta_beta_deg = (b.terminal_beta - a.terminal_beta) * kDegPerRad;
  rep.delta_u_ms = (b.terminal.u - a.terminal.u) * sc.speed_unit_ms;
  rep.delta_v_ms = (b.terminal.v - a.terminal.v) * sc.speed_unit_ms;

  // Series for b, linearly interpolated onto a's grid (clamped at the ends).
  std::vector<double> bt;
  std::vector<State> bx;
  std::vector<double> bbeta;
  for (const FlightSample& s : b.samples) {
    bt.push_back(s.t);
    bx.push_back(s.x);
    bbeta.push_back(s.beta);
  }
  bt.push_back(b.terminal_time);
  bx.push_back(b.terminal);
  bbeta.push_back(b.terminal_beta);
  auto interp_b = [&](double t, State& x, double& beta) {
    if (t <= bt.front()) {
      x = bx.front();
      beta = bbeta.front();
      return;
    }
    if (t >= bt.back()) {
      x = bx.back();
      beta = bbeta.back();
      return;
    }
    const auto it = std::upper_bound(bt.begin(), bt.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - bt.begin());
    const double w = (t - bt[i - 1]) / (bt[i] - bt[i - 1]);
    auto mix = [w](double p, double q) { return p + w * (q - p); };
    x = State{mix(bx[i - 1].r, bx[i].r), mix(bx[i - 1].u, bx[i].u), mix(bx[i - 1].v, bx[i].v),
              mix(bx[i - 1].m, bx[i].m)};
    beta = mix(bbeta[i - 1], bbeta[i]);
  };

  std::string& csv = rep.aligned_csv;
  csv = "t_s,a_altitude_m,a_u_ms,a_v_ms,a_mass_kg,a_beta_deg,"
        "b_altitude_m,b_u_ms,b_v_ms,b_mass_kg,b_beta_deg\n";
  auto emit = [&](double t, const State& xa, double beta_a) {
    State xb;
    double beta_b = 0;
    interp_b(t, xb, beta_b);
    csv += format_g17(t * sc.time_unit_s);
    for (const double val :
         {(xa.r - 1.0) * sc.length_unit_m, xa.u * sc.speed_unit_ms, xa.v * sc.speed_unit_ms,
          xa.m * sc.mass_unit_kg, beta_a * kDegPerRad, (xb.r - 1.0) * sc.length_unit_m,
          xb.u * sc.speed_unit_ms, xb.v * sc.speed_unit_ms, xb.m * sc.mass_unit_kg,
          beta_b * kDegPerRad}) {
      csv += ',';
      csv += format_g17(val);
    }
    csv += '\n';
  };
  for (const FlightSample& s : a.samples) emit(s.t, s.x, s.beta);
  emit(a.terminal_time, a.terminal, a.terminal_beta);
  return rep;
}

}  // namespace pdg
