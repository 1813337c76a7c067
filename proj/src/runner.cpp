#include "pdg/runner.hpp"

#include "pdg/mlp.hpp"
#include "pdg/sampler.hpp"
#include "pdg/shooting.hpp"
#include "pdg/simulator.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>
#include <vector>

namespace pdg {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

class Manifest {
 public:
  Manifest(const RunContext& ctx, std::string subcommand)
      : ctx_(ctx), subcommand_(std::move(subcommand)),
        start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(ctx.out_dir);
  }

  void add_input(const std::string& path) { inputs_.emplace_back(path, hash_file(path)); }
  void add_output(const std::string& path) { outputs_.push_back(path); }

  std::string out_path(const std::string& name) {
    const std::string p = join_path(ctx_.out_dir, name);
    add_output(p);
    return p;
  }

  void write() const {
    json j;
    j["subcommand"] = subcommand_;
    j["config_hash"] = fnv1a_hex(ctx_.config_text);
    j["seed"] = ctx_.cfg.rng_seed;
    j["threads"] = ctx_.threads;
    json in = json::object();
    for (const auto& [path, hash] : inputs_) in[path] = hash;
    j["inputs"] = in;
    j["outputs"] = outputs_;
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    j["wall_time_s"] = std::chrono::duration<double>(elapsed).count();
    write_text_file(join_path(ctx_.out_dir, "manifest_" + subcommand_ + ".json"),
                    j.dump(2) + "\n");
  }

 private:
  const RunContext& ctx_;
  std::string subcommand_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

IntegratorSettings integrator_settings(const RunConfig& cfg) {
  IntegratorSettings s;
  s.rel_tol = cfg.integrator_rel_tol;
  s.abs_tol = cfg.integrator_abs_tol;
  s.max_step = cfg.integrator_max_step;
  s.dense_output_dt = cfg.dense_output_dt;
  return s;
}

}  // namespace

RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        int threads) {
  RunContext ctx;
  ctx.config_text = config_path.empty() ? default_config_text() : read_text_file(config_path);
  ctx.cfg = parse_config(ctx.config_text);
  if (!out_dir.empty()) ctx.out_dir = out_dir;
  ctx.threads = threads > 0 ? threads : 1;
  return ctx;
}

void run_nominal(const RunContext& ctx) {
  Manifest manifest(ctx, "nominal");
  const ProblemConfig prob = ctx.cfg.make_problem_config();
  const State x0 = ctx.cfg.nominal_initial_state();
  const IntegratorSettings settings = integrator_settings(ctx.cfg);
  const ScalingSet& sc = prob.scaling;

  const double target = ctx.cfg.reg.delta;
  const std::vector<double> schedule =
      target > 0 ? uniform_delta_schedule(target) : std::vector<double>{0.0};

  log_info("nominal: cold start at zero penalty weight");
  const ShootingResult cold = solve_from_grid(x0, prob.with_delta(0.0), settings);
  log_info("nominal: continuation over " + std::to_string(schedule.size()) + " stages");
  const std::vector<ShootingResult> stages =
      homotopy_delta(x0, cold.solution, schedule, prob, settings);

  json result;
  result["config_hash"] = fnv1a_hex(ctx.config_text);
  result["stages"] = json::array();
  std::string steering_csv = "delta,t_s,beta_deg\n";
  std::string reg_csv = "delta,t_s,delta_term\n";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const ShootingResult& st = stages[i];
    char name[64];
    std::snprintf(name, sizeof(name), "trajectory_stage_%02zu.csv", i);
    json sj;
    sj["delta"] = st.delta;
    sj["converged"] = st.converged;
    sj["iterations"] = st.iterations;
    sj["residual_norm"] = st.residual_norm;
    sj["tf"] = st.solution.tf;
    sj["tf_s"] = st.solution.tf * sc.time_unit_s;
    if (st.converged) {
      const std::string path = manifest.out_path(name);
      write_trajectory_csv(st.trajectory, path);
      sj["trajectory_csv"] = std::string(name);
      for (const TrajectoryNode& n : st.trajectory.nodes) {
        steering_csv += format_g17(st.delta);
        steering_csv += ',';
        steering_csv += format_g17(n.t * sc.time_unit_s);
        steering_csv += ',';
        steering_csv += format_g17(n.beta * 180.0 / kPi);
        steering_csv += '\n';
        reg_csv += format_g17(st.delta);
        reg_csv += ',';
        reg_csv += format_g17(n.t * sc.time_unit_s);
        reg_csv += ',';
        reg_csv += format_g17(n.delta_term);
        reg_csv += '\n';
      }
    } else {
      sj["message"] = st.message;
    }
    result["stages"].push_back(std::move(sj));
  }

  const ShootingResult& final_stage = stages.back();
  const bool ok = final_stage.converged && final_stage.delta == target;
  result["converged"] = ok;

  double tf0 = 0;
  for (const ShootingResult& st : stages) {
    if (st.delta == 0 && st.converged) {
      tf0 = st.solution.tf;
      break;
    }
  }
  result["tf_delta0_s"] = tf0 * sc.time_unit_s;
  if (ok) {
    const double tf1 = final_stage.solution.tf;
    result["tf_final_s"] = tf1 * sc.time_unit_s;
    result["extra_fuel_kg"] = prob.mdot * (tf1 - tf0) * sc.mass_unit_kg;
    const TrajectoryMeta& meta = final_stage.trajectory.meta;
    const TrajectoryNode& td = final_stage.trajectory.nodes.back();
    result["touchdown"] = {{"p_r0", meta.p_r0},
                           {"p_u0", meta.p_u0},
                           {"p_v0", meta.p_v0},
                           {"mass", td.x.m},
                           {"beta_deg", td.beta * 180.0 / kPi},
                           {"tf", final_stage.solution.tf}};
    write_text_file(manifest.out_path("trajectory_nominal.csv"),
                    trajectory_to_csv(final_stage.trajectory));
    write_text_file(manifest.out_path("steering_profile.csv"), steering_csv);
    write_text_file(manifest.out_path("regularization_profile.csv"), reg_csv);
  }
  write_text_file(manifest.out_path("result.json"), result.dump(2) + "\n");
  manifest.write();
  if (!ok) {
    throw NumericalError("nominal: continuation failed at delta = " +
                         format_g17(final_stage.delta) + ": " + final_stage.message);
  }
}

void run_generate(const RunContext& ctx, const std::string& nominal_json) {
  Manifest manifest(ctx, "generate");
  manifest.add_input(nominal_json);
  const ProblemConfig prob = ctx.cfg.make_problem_config();

  json nominal;
  try {
    nominal = json::parse(read_text_file(nominal_json));
  } catch (const json::exception& e) {
    throw ConfigError("nominal result " + nominal_json + ": " + e.what());
  }
  if (!nominal.value("converged", false)) {
    throw ConfigError("nominal result " + nominal_json + " is not a converged run");
  }
  SamplingSpec spec;
  try {
    const json& td = nominal.at("touchdown");
    spec.nominal.p_r0 = td.at("p_r0").get<double>();
    spec.nominal.p_u0 = td.at("p_u0").get<double>();
    spec.nominal.p_v0 = td.at("p_v0").get<double>();
    spec.options.tau_max = ctx.cfg.sample_tau_max_factor * td.at("tf").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("nominal result " + nominal_json + ": " + e.what());
  }
  spec.radius_frac = ctx.cfg.sample_radius_frac;
  spec.count = ctx.cfg.sample_count;
  spec.seed = ctx.cfg.rng_seed;
  spec.options.altitude_cap =
      ctx.cfg.sample_altitude_cap_factor * (ctx.cfg.nominal_initial_state().r - 1.0);
  spec.options.mass_cap = ctx.cfg.sample_mass_cap;
  spec.options.integrator = integrator_settings(ctx.cfg);

  const Dataset ds = build_dataset(spec, prob, ctx.threads);
  log_info("generate: " + std::to_string(ds.accepted) + " trajectories, " +
           std::to_string(ds.samples.size()) + " samples");
  write_dataset(ds, manifest.out_path("dataset.csv"), manifest.out_path("dataset.meta.json"));
  manifest.write();
}

void run_train(const RunContext& ctx, const std::string& dataset_csv) {
  Manifest manifest(ctx, "train");
  const std::string suffix = ".csv";
  if (dataset_csv.size() <= suffix.size() ||
      dataset_csv.compare(dataset_csv.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw ConfigError("train: dataset path must end in .csv (sidecar is derived from it)");
  }
  const std::string sidecar =
      dataset_csv.substr(0, dataset_csv.size() - suffix.size()) + ".meta.json";
  manifest.add_input(dataset_csv);
  manifest.add_input(sidecar);

  const Dataset ds = read_dataset(dataset_csv, sidecar);
  TrainOptions opts;
  opts.method = ctx.cfg.nn_trainer;
  opts.epochs = ctx.cfg.nn_epochs;
  opts.batch_size = ctx.cfg.nn_batch_size;
  opts.learning_rate = ctx.cfg.nn_learning_rate;
  opts.lr_decay = ctx.cfg.nn_lr_decay;
  opts.lr_decay_every = ctx.cfg.nn_lr_decay_every;
  opts.seed = ctx.cfg.rng_seed;
  opts.hidden = ctx.cfg.nn_hidden;
  opts.threads = ctx.threads;

  const TrainOutcome outcome = train(ds, opts);
  const TrainReport& rep = outcome.report;
  log_info("train: best epoch " + std::to_string(rep.best_epoch) + ", validation MSE " +
           format_g17(rep.final_val_mse));

  std::string history = "epoch,train_mse,val_mse,test_mse\n";
  for (std::size_t e = 0; e < rep.train_mse.size(); ++e) {
    history += std::to_string(e);
    history += ',';
    history += format_g17(rep.train_mse[e]);
    history += ',';
    history += format_g17(rep.val_mse[e]);
    history += ',';
    history += format_g17(rep.test_mse[e]);
    history += '\n';
  }
  write_text_file(manifest.out_path("training_history.csv"), history);
  save_model(outcome.model, manifest.out_path("model.json"), &rep);
  manifest.write();
  if (rep.aborted) throw NumericalError("train: " + rep.message);
}

namespace {

State initial_state_from_file(const RunConfig& cfg, const std::string& ic_path) {
  json j;
  try {
    j = json::parse(read_text_file(ic_path), nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("initial condition " + ic_path + ": " + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "radius_km" && key != "u_ms" && key != "v_ms" && key != "mass_kg") {
      throw ConfigError("initial condition " + ic_path + ": unknown key '" + key + "'");
    }
  }
  const ScalingSet sc = make_scaling(cfg.constants);
  State x = cfg.nominal_initial_state();
  if (j.contains("radius_km")) x.r = j["radius_km"].get<double>() * 1000.0 / sc.length_unit_m;
  if (j.contains("u_ms")) x.u = j["u_ms"].get<double>() / sc.speed_unit_ms;
  if (j.contains("v_ms")) x.v = j["v_ms"].get<double>() / sc.speed_unit_ms;
  if (j.contains("mass_kg")) x.m = j["mass_kg"].get<double>() / sc.mass_unit_kg;
  return x;
}

}  // namespace

void run_simulate(const RunContext& ctx, const std::string& model_path,
                  const std::string& ic_path, const std::string& reference_csv) {
  Manifest manifest(ctx, "simulate");
  manifest.add_input(model_path);
  const ProblemConfig prob = ctx.cfg.make_problem_config();
  const ScalingSet& sc = prob.scaling;

  const MlpModel model = load_model(model_path);
  const State x0 = ic_path.empty() ? ctx.cfg.nominal_initial_state()
                                   : initial_state_from_file(ctx.cfg, ic_path);
  if (!ic_path.empty()) manifest.add_input(ic_path);

  Trajectory reference;
  if (!reference_csv.empty()) {
    manifest.add_input(reference_csv);
    reference = read_trajectory_csv(reference_csv);
  }

  FlightParams params;
  params.control_dt = ctx.cfg.control_dt_s / sc.time_unit_s;
  params.gate_altitude = ctx.cfg.gate_altitude_m / sc.length_unit_m;
  // Timeout anchor: the reference flight time when one is supplied, else the
  // 90%-fuel burn time (a loose upper bound on any plausible descent).
  const double anchor = !reference_csv.empty()
                            ? reference.meta.final_time
                            : 0.9 * x0.m / prob.mdot;
  params.t_max = ctx.cfg.sim_timeout_factor * anchor;
  params.integrator = integrator_settings(ctx.cfg);

  const SteeringPolicy policy = [&model](const State& x) { return forward(model, x); };
  const FlightLog nn_log = fly_closed_loop(x0, policy, params, prob);
  write_text_file(manifest.out_path("flight_nn.csv"), flight_log_csv(nn_log, sc));
  write_text_file(manifest.out_path("flight_nn_summary.json"),
                  terminal_summary_json(nn_log, sc));

  if (!reference_csv.empty()) {
    const FlightLog ref_log = fly_open_loop(reference, params, prob);
    write_text_file(manifest.out_path("flight_reference.csv"), flight_log_csv(ref_log, sc));
    write_text_file(manifest.out_path("flight_reference_summary.json"),
                    terminal_summary_json(ref_log, sc));
    const ComparisonReport rep = compare_runs(ref_log, nn_log, sc);
    write_text_file(manifest.out_path("comparison.csv"), rep.aligned_csv);
    json cj;
    cj["a"] = "reference";
    cj["b"] = "nn";
    cj["initial_condition_mismatch"] = rep.initial_condition_mismatch;
    cj["delta_final_time_s"] = rep.delta_final_time_s;
    cj["delta_fuel_kg"] = rep.delta_fuel_kg;
    cj["delta_beta_deg"] = rep.delta_beta_deg;
    cj["delta_u_ms"] = rep.delta_u_ms;
    cj["delta_v_ms"] = rep.delta_v_ms;
    write_text_file(manifest.out_path("comparison.json"), cj.dump(2) + "\n");
  }
  manifest.write();
  if (!nn_log.reached_gate) {
    throw NumericalError("simulate: " + (nn_log.message.empty()
                                             ? std::string("flight did not reach the gate")
                                             : nn_log.message));
  }
}

VerifyReport run_verify(const RunContext& ctx, const std::string& trajectory_csv) {
  Manifest manifest(ctx, "verify");
  manifest.add_input(trajectory_csv);
  const Trajectory traj = read_trajectory_csv(trajectory_csv);
  const VerifyReport report = verify_trajectory(traj, ctx.cfg.make_problem_config());
  write_text_file(manifest.out_path("verification.json"), verify_report_json(report));
  manifest.write();
  return report;
}

}  // namespace pdg
