#include "pdg/core.hpp"
#include "pdg/runner.hpp"
#include "pdg/verify.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

namespace {

std::string in_out_dir(const std::string& out_dir, const char* name) {
  return (std::filesystem::path(out_dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fuel-optimal lunar vertical-landing guidance pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", config_path, "JSON config file (built-in defaults if omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (created if missing)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override the configured RNG seed");
  app.add_option("--threads", threads, "worker threads for trajectory generation");

  CLI::App* cmd_nominal =
      app.add_subcommand("nominal", "solve the optimal descent with penalty continuation");
  std::string nominal_json;
  CLI::App* cmd_generate =
      app.add_subcommand("generate", "build the training dataset around the nominal touchdown");
  cmd_generate->add_option("--nominal", nominal_json,
                           "nominal result.json (default: <out>/result.json)");
  std::string dataset_csv;
  CLI::App* cmd_train = app.add_subcommand("train", "train the steering network");
  cmd_train->add_option("--dataset", dataset_csv,
                        "dataset CSV, sidecar derived (default: <out>/dataset.csv)");
  std::string model_path, ic_path, reference_csv;
  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "fly the closed loop under the trained network");
  cmd_simulate->add_option("--model", model_path, "model JSON (default: <out>/model.json)");
  cmd_simulate->add_option("--ic", ic_path, "initial-condition JSON overriding the nominal")
      ->check(CLI::ExistingFile);
  cmd_simulate
      ->add_option("--trajectory", reference_csv, "reference trajectory CSV for comparison")
      ->check(CLI::ExistingFile);
  std::string verify_csv;
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "audit a trajectory file against the necessary conditions");
  cmd_verify->add_option("--trajectory", verify_csv, "trajectory CSV to audit")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    pdg::RunContext ctx = pdg::make_context(config_path, out_dir, threads);
    if (seed_opt->count() > 0) ctx.cfg.rng_seed = seed;
    if (*cmd_nominal) {
      pdg::run_nominal(ctx);
    } else if (*cmd_generate) {
      pdg::run_generate(ctx, nominal_json.empty() ? in_out_dir(ctx.out_dir, "result.json")
                                                  : nominal_json);
    } else if (*cmd_train) {
      pdg::run_train(ctx, dataset_csv.empty() ? in_out_dir(ctx.out_dir, "dataset.csv")
                                              : dataset_csv);
    } else if (*cmd_simulate) {
      pdg::run_simulate(ctx,
                        model_path.empty() ? in_out_dir(ctx.out_dir, "model.json") : model_path,
                        ic_path, reference_csv);
    } else if (*cmd_verify) {
      const pdg::VerifyReport report = pdg::run_verify(ctx, verify_csv);
      std::fputs(pdg::verify_report_text(report).c_str(), stdout);
      return report.pass ? 0 : 2;
    }
  } catch (const pdg::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
