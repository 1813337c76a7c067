#pragma once

#include "pdg/core.hpp"
#include "pdg/verify.hpp"

#include <cstdint>
#include <string>

namespace pdg {

/// Everything a subcommand needs beyond its own inputs: the parsed config,
/// the exact text it was parsed from (hashed into manifests), and where
/// outputs go.
struct RunContext {
  RunConfig cfg;
  std::string config_text;
  std::string out_dir = "out";
  int threads = 1;
};

/// Load a config file (or the built-in default when `config_path` is empty)
/// into a context.  A --seed override is applied by the caller afterwards.
RunContext make_context(const std::string& config_path, const std::string& out_dir,
                        int threads);

/// Penalty continuation from zero to the configured weight; writes per-stage
/// trajectory CSVs, result.json with the headline flight times and touchdown
/// costates, and the steering/regularization profile CSVs.  Throws
/// NumericalError after writing a diagnostic result.json if a stage fails.
void run_nominal(const RunContext& ctx);

/// Builds the training set around the touchdown triple recorded in a
/// nominal result.json; writes dataset.csv and dataset.meta.json.
void run_generate(const RunContext& ctx, const std::string& nominal_json);

/// Trains on dataset.csv (+ .meta.json sidecar next to it); writes
/// model.json and training_history.csv.
void run_train(const RunContext& ctx, const std::string& dataset_csv);

/// Closed-loop flight under the model; optional initial-condition JSON and
/// optional open-loop reference trajectory for a side-by-side comparison.
/// Writes flight logs, terminal summaries, and comparison files.  Throws
/// NumericalError (after writing) if the flight misses the gate.
void run_simulate(const RunContext& ctx, const std::string& model_path,
                  const std::string& ic_path, const std::string& reference_csv);

/// Necessary-condition audit of a trajectory file; writes verification.json
/// and returns the report for the caller to print and exit on.
VerifyReport run_verify(const RunContext& ctx, const std::string& trajectory_csv);

}  // namespace pdg
