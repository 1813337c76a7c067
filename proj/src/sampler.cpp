#include "pdg/sampler.hpp"

#include "pdg/dynamics.hpp"
#include "pdg/steering.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace pdg {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBoundaryTol = 1.0e-11;

}  // namespace

double touchdown_mass_unregularized(const TouchdownTriple& t, const ProblemConfig& cfg) {
  const double denom = 1.0 - t.p_v0 * cfg.mu;
  return cfg.thrust * std::hypot(t.p_u0, t.p_v0) / denom;
}

BoundarySolve touchdown_boundary(const TouchdownTriple& triple, const ProblemConfig& cfg) {
  BoundarySolve out;
  const double primer = std::hypot(triple.p_u0, triple.p_v0);
  if (!(primer > 1.0e-14)) {
    out.reject_reason = "zero primer vector at touchdown";
    return out;
  }

  double m, beta;
  if (cfg.reg.delta == 0.0) {
    // Thrust opposes the primer vector; the mass then follows in closed form.
    if (!(1.0 - triple.p_v0 * cfg.mu > 0)) {
      out.reject_reason = "nonpositive touchdown mass";
      return out;
    }
    m = touchdown_mass_unregularized(triple, cfg);
    beta = std::atan2(-triple.p_v0, -triple.p_u0);
    if (beta < 0) beta += 2 * kPi;
  } else {
    // Penalty-dominated touchdown sits next to vertical thrust; start from
    // the mass that balances H with beta exactly at pi/2.
    const double denom = triple.p_v0 * cfg.mu - 1.0;
    m = cfg.thrust * triple.p_v0 / denom;
    beta = 0.5 * kPi;
  }
  if (!(m > 0) || !std::isfinite(m)) {
    out.reject_reason = "nonpositive touchdown mass";
    return out;
  }

  const Costate p_td{triple.p_r0, triple.p_u0, triple.p_v0, 0.0};
  auto residuals = [&](double mm, double bb, double& f1, double& f2) {
    const State x{1.0, 0.0, 0.0, mm};
    f1 = stationarity_residual(x, p_td, bb, cfg);
    f2 = hamiltonian(x, p_td, bb, cfg);
  };

  // At the surface the penalty gain is exactly delta/eps.
  const double gain = cfg.reg.delta / cfg.reg.epsilon;
  double f1 = 0, f2 = 0;
  residuals(m, beta, f1, f2);
  bool converged = std::abs(f1) < kBoundaryTol && std::abs(f2) < kBoundaryTol;
  for (int iter = 0; iter < 100 && !converged; ++iter) {
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double am = cfg.thrust / m;
    const double j11 = -(am / m) * (-triple.p_u0 * sb + triple.p_v0 * cb);
    const double j12 = am * (-triple.p_u0 * cb - triple.p_v0 * sb) + gain;
    const double j21 = -(am / m) * (triple.p_u0 * cb + triple.p_v0 * sb);
    const double j22 = f1;  // dH/dbeta equals the stationarity residual
    const double det = j11 * j22 - j12 * j21;
    if (!(std::abs(det) > 1.0e-300) || !std::isfinite(det)) {
      out.reject_reason = "singular touchdown Jacobian";
      return out;
    }
    double dm = -(j22 * f1 - j12 * f2) / det;
    double db = -(-j21 * f1 + j11 * f2) / det;
    // Keep the angle step modest and the mass positive.
    double step = 1.0;
    if (std::abs(db) > 0.5) step = 0.5 / std::abs(db);
    for (int halve = 0; halve < 60 && m + step * dm <= 1.0e-6; ++halve) step *= 0.5;
    if (m + step * dm <= 0) {
      out.reject_reason = "touchdown mass iterate collapsed";
      return out;
    }
    m += step * dm;
    beta += step * db;
    residuals(m, beta, f1, f2);
    if (!std::isfinite(f1) || !std::isfinite(f2)) {
      out.reject_reason = "touchdown solve diverged";
      return out;
    }
    converged = std::abs(f1) < kBoundaryTol && std::abs(f2) < kBoundaryTol;
  }
  if (!converged) {
    out.reject_reason = "touchdown solve did not converge";
    return out;
  }
  while (beta < 0) beta += 2 * kPi;
  while (beta >= 2 * kPi) beta -= 2 * kPi;

  // The converged angle must also be the global Hamiltonian minimizer; a
  // zero of the stationarity condition on the wrong branch is not a landing.
  const State x_td{1.0, 0.0, 0.0, m};
  const double beta_opt = optimal_steering(x_td, p_td, cfg).beta;
  if (std::abs(beta_opt - beta) > 1.0e-8) {
    out.reject_reason = "touchdown angle is not the minimizing branch";
    return out;
  }

  out.ok = true;
  out.boundary = TouchdownBoundary{m, beta, f2, f1};
  return out;
}

GenerationResult generate_trajectory(const TouchdownTriple& triple, const SamplerOptions& opts,
                                     const ProblemConfig& cfg) {
  if (!(opts.tau_max > 0) || !std::isfinite(opts.tau_max)) {
    throw ConfigError("sampler: tau_max must be positive");
  }
  GenerationResult out;
  const BoundarySolve b = touchdown_boundary(triple, cfg);
  if (!b.ok) {
    out.reject_reason = b.reject_reason;
    return out;
  }

  double tau_end = opts.tau_max;
  if (opts.mass_cap > 0) {
    // Mass grows linearly in reverse time, so the cap converts exactly.
    const double tau_mass = (opts.mass_cap - b.boundary.m0) / cfg.mdot;
    if (!(tau_mass > 0)) {
      out.reject_reason = "mass cap at or below touchdown mass";
      return out;
    }
    tau_end = std::min(tau_end, tau_mass);
  }

  ExtendedState start;
  start.x = State{1.0, 0.0, 0.0, b.boundary.m0};
  start.p = Costate{triple.p_r0, triple.p_u0, triple.p_v0, 0.0};
  start.accumulated_cost = 0.0;

  std::vector<OdeEvent> events;
  int cap_index = -1;
  if (opts.altitude_cap > 0) {
    OdeEvent cap;
    cap.value = [alt = opts.altitude_cap](double, const OdeVec& y) { return y[0] - 1.0 - alt; };
    cap.direction = +1;
    cap_index = static_cast<int>(events.size());
    events.push_back(cap);
  }
  // A descent extremal must climb away from the surface in reverse time; the
  // offset keeps integration wiggle at the anchored start from triggering.
  OdeEvent subsurface;
  subsurface.value = [](double, const OdeVec& y) { return y[0] - 1.0 + 1.0e-10; };
  subsurface.direction = -1;
  const int subsurface_index = static_cast<int>(events.size());
  events.push_back(subsurface);

  const IntegrationResult res = integrate(extremal_rhs(cfg, -1.0), 0.0, tau_end,
                                          pack_extended(start), opts.integrator, events);
  if (res.status == TerminationStatus::StepFailure) {
    out.reject_reason = "integration failure" + (res.message.empty() ? "" : ": " + res.message);
    return out;
  }
  if (res.status == TerminationStatus::EventTriggered && res.triggered_event == subsurface_index) {
    out.reject_reason = "dipped below the surface";
    return out;
  }
  if (res.times.size() < 2) {
    out.reject_reason = "empty after truncation";
    return out;
  }

  const double horizon = res.end_time;
  Trajectory traj;
  traj.nodes.reserve(res.times.size());
  for (std::size_t i = res.times.size(); i-- > 0;) {
    const ExtendedState s = unpack_extended(res.states[i]);
    TrajectoryNode node;
    node.t = horizon - res.times[i];
    node.x = s.x;
    node.p = s.p;
    const SteeringSolution sol = optimal_steering(s.x, s.p, cfg);
    node.beta = sol.beta;
    node.hamiltonian = sol.hamiltonian_value;
    node.delta_term = regularization_term(s.x.r, node.beta, cfg.reg);
    traj.nodes.push_back(node);
  }
  traj.meta.p_r0 = triple.p_r0;
  traj.meta.p_u0 = triple.p_u0;
  traj.meta.p_v0 = triple.p_v0;
  traj.meta.final_time = horizon;
  traj.meta.status = (res.status == TerminationStatus::EventTriggered &&
                      res.triggered_event == cap_index)
                         ? TerminationStatus::EventTriggered
                         : TerminationStatus::ReachedEnd;
  out.ok = true;
  out.trajectory = std::move(traj);
  return out;
}

Dataset build_dataset(const SamplingSpec& spec, const ProblemConfig& cfg, int threads) {
  if (spec.count <= 0) throw ConfigError("sampler: count must be positive");
  if (!(spec.radius_frac >= 0) || !std::isfinite(spec.radius_frac)) {
    throw ConfigError("sampler: radius_frac must be nonnegative");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<TouchdownTriple> triples(spec.count);
  for (auto& t : triples) {
    t.p_r0 = spec.nominal.p_r0 +
             spec.radius_frac * std::abs(spec.nominal.p_r0) * (2.0 * rng_unit(rng) - 1.0);
    t.p_u0 = spec.nominal.p_u0 +
             spec.radius_frac * std::abs(spec.nominal.p_u0) * (2.0 * rng_unit(rng) - 1.0);
    t.p_v0 = spec.nominal.p_v0 +
             spec.radius_frac * std::abs(spec.nominal.p_v0) * (2.0 * rng_unit(rng) - 1.0);
  }

  // Triples are drawn up front and results land in their slot, so the
  // outcome is identical whatever the thread count.
  std::vector<GenerationResult> results(spec.count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= spec.count) break;
      try {
        results[i] = generate_trajectory(triples[i], spec.options, cfg);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].reject_reason = e.what();
      }
    }
  };
  const int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  Dataset ds;
  ds.spec = spec;
  for (int i = 0; i < spec.count; ++i) {
    GenerationResult& res = results[i];
    if (!res.ok) {
      ds.rejections.push_back(RejectionRecord{i, triples[i], res.reject_reason});
      continue;
    }
    const int traj_id = static_cast<int>(ds.trajectories.size());
    const double final_time = res.trajectory.meta.final_time;
    for (const TrajectoryNode& node : res.trajectory.nodes) {
      DatasetSample s;
      s.x = node.x;
      s.beta = node.beta;
      s.p = node.p;
      s.traj_id = traj_id;
      s.tau = final_time - node.t;
      ds.samples.push_back(s);
    }
    ds.trajectories.push_back(std::move(res.trajectory));
  }
  ds.accepted = static_cast<int>(ds.trajectories.size());
  if (2 * ds.rejections.size() > static_cast<std::size_t>(spec.count)) {
    std::ostringstream msg;
    msg << "sampler: " << ds.rejections.size() << " of " << spec.count
        << " triples rejected";
    if (!ds.rejections.empty()) msg << " (first: " << ds.rejections.front().reason << ")";
    throw NumericalError(msg.str());
  }
  if (!ds.rejections.empty()) {
    log_info("sampler: rejected " + std::to_string(ds.rejections.size()) + " of " +
             std::to_string(spec.count) + " triples");
  }

  // Sample-level split, 70/15/15, shuffled on an independent stream so the
  // draw above stays untouched.
  const int n = static_cast<int>(ds.samples.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 srng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng_below(srng, static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  const int n_train = static_cast<int>(std::llround(0.70 * n));
  const int n_val = std::min(static_cast<int>(std::llround(0.15 * n)), n - n_train);
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.val_idx.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  ds.test_idx.assign(order.begin() + n_train + n_val, order.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& csv_path,
                   const std::string& sidecar_path) {
  // Forward flight time per trajectory; the touchdown node carries tau = 0
  // and the start node tau = T, so T is recoverable from the samples alone.
  std::vector<double> final_times(ds.accepted, 0.0);
  for (const DatasetSample& s : ds.samples) {
    if (s.traj_id < 0 || s.traj_id >= ds.accepted) {
      throw ConfigError("dataset: sample references an unknown trajectory");
    }
    final_times[s.traj_id] = std::max(final_times[s.traj_id], s.tau);
  }

  std::string csv = "traj_id,t,r,u,v,m,beta\n";
  for (const DatasetSample& s : ds.samples) {
    csv += std::to_string(s.traj_id);
    csv += ',';
    csv += format_g17(final_times[s.traj_id] - s.tau);
    csv += ',';
    csv += format_g17(s.x.r);
    csv += ',';
    csv += format_g17(s.x.u);
    csv += ',';
    csv += format_g17(s.x.v);
    csv += ',';
    csv += format_g17(s.x.m);
    csv += ',';
    csv += format_g17(s.beta);
    csv += '\n';
  }
  write_text_file(csv_path, csv);

  json j;
  j["format"] = "pdg-dataset";
  j["version"] = "1";
  j["spec"]["nominal"] = {ds.spec.nominal.p_r0, ds.spec.nominal.p_u0, ds.spec.nominal.p_v0};
  j["spec"]["radius_frac"] = ds.spec.radius_frac;
  j["spec"]["count"] = ds.spec.count;
  j["spec"]["seed"] = ds.spec.seed;
  j["spec"]["tau_max"] = ds.spec.options.tau_max;
  j["spec"]["altitude_cap"] = ds.spec.options.altitude_cap;
  j["spec"]["mass_cap"] = ds.spec.options.mass_cap;
  j["accepted"] = ds.accepted;
  j["trajectory_final_times"] = final_times;
  j["rejections"] = json::array();
  for (const RejectionRecord& r : ds.rejections) {
    j["rejections"].push_back({{"index", r.index},
                               {"triple", {r.triple.p_r0, r.triple.p_u0, r.triple.p_v0}},
                               {"reason", r.reason}});
  }
  j["splits"]["train"] = ds.train_idx;
  j["splits"]["val"] = ds.val_idx;
  j["splits"]["test"] = ds.test_idx;
  write_text_file(sidecar_path, j.dump());
}

namespace {

double parse_field(const std::string& field, const std::string& path) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw ConfigError("dataset: malformed numeric field '" + field + "' in " + path);
  }
  return value;
}

}  // namespace

Dataset read_dataset(const std::string& csv_path, const std::string& sidecar_path) {
  Dataset ds;

  json j;
  try {
    j = json::parse(read_text_file(sidecar_path));
  } catch (const json::exception& e) {
    throw ConfigError("dataset sidecar " + sidecar_path + ": " + e.what());
  }
  try {
    if (j.at("format") != "pdg-dataset") {
      throw ConfigError("dataset sidecar " + sidecar_path + ": unknown format");
    }
    const auto& spec = j.at("spec");
    ds.spec.nominal.p_r0 = spec.at("nominal").at(0).get<double>();
    ds.spec.nominal.p_u0 = spec.at("nominal").at(1).get<double>();
    ds.spec.nominal.p_v0 = spec.at("nominal").at(2).get<double>();
    ds.spec.radius_frac = spec.at("radius_frac").get<double>();
    ds.spec.count = spec.at("count").get<int>();
    ds.spec.seed = spec.at("seed").get<std::uint64_t>();
    ds.spec.options.tau_max = spec.at("tau_max").get<double>();
    ds.spec.options.altitude_cap = spec.at("altitude_cap").get<double>();
    ds.spec.options.mass_cap = spec.at("mass_cap").get<double>();
    ds.accepted = j.at("accepted").get<int>();
    for (const auto& r : j.at("rejections")) {
      RejectionRecord rec;
      rec.index = r.at("index").get<int>();
      rec.triple.p_r0 = r.at("triple").at(0).get<double>();
      rec.triple.p_u0 = r.at("triple").at(1).get<double>();
      rec.triple.p_v0 = r.at("triple").at(2).get<double>();
      rec.reason = r.at("reason").get<std::string>();
      ds.rejections.push_back(rec);
    }
    ds.train_idx = j.at("splits").at("train").get<std::vector<int>>();
    ds.val_idx = j.at("splits").at("val").get<std::vector<int>>();
    ds.test_idx = j.at("splits").at("test").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError("dataset sidecar " + sidecar_path + ": " + e.what());
  }
  const std::vector<double> final_times =
      j.at("trajectory_final_times").get<std::vector<double>>();
  if (static_cast<int>(final_times.size()) != ds.accepted) {
    throw ConfigError("dataset sidecar " + sidecar_path + ": final-time table size mismatch");
  }

  const std::string text = read_text_file(csv_path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "traj_id,t,r,u,v,m,beta") {
    throw ConfigError("dataset " + csv_path + ": unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw ConfigError("dataset " + csv_path + ": expected 7 columns");
    }
    DatasetSample s;
    const double id_value = parse_field(fields[0], csv_path);
    s.traj_id = static_cast<int>(id_value);
    if (s.traj_id < 0 || s.traj_id >= ds.accepted || id_value != s.traj_id) {
      throw ConfigError("dataset " + csv_path + ": bad trajectory id " + fields[0]);
    }
    const double t = parse_field(fields[1], csv_path);
    s.x.r = parse_field(fields[2], csv_path);
    s.x.u = parse_field(fields[3], csv_path);
    s.x.v = parse_field(fields[4], csv_path);
    s.x.m = parse_field(fields[5], csv_path);
    s.beta = parse_field(fields[6], csv_path);
    s.tau = final_times[s.traj_id] - t;
    ds.samples.push_back(s);
  }

  const int n = static_cast<int>(ds.samples.size());
  for (const auto* split : {&ds.train_idx, &ds.val_idx, &ds.test_idx}) {
    for (int idx : *split) {
      if (idx < 0 || idx >= n) {
        throw ConfigError("dataset sidecar " + sidecar_path + ": split index out of range");
      }
    }
  }
  return ds;
}

}  // namespace pdg
