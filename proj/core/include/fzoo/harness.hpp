#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fzoo/run_config.hpp"

// Experiment runner and CLI entry points.
//
// One experiment = objective x optimizer grid x seeds under a shared budget.
// Every run writes <optimizer>_eta<..>_eps<..>_s<seed>.csv with columns
// step,fwd_cum,loss,sigma,grad_norm,wall_ms; summary.json records final
// full-batch losses, per-grid-point aggregates, and the selected grid point
// (lowest mean final loss, ties to the smaller eta then smaller epsilon).
// All output bytes except the wall_ms column are a pure function of the
// config, so diffing two runs of the same config ignores only that column.

namespace fzoo::harness {

struct RunKey {
  std::string optimizer;
  std::uint64_t seed = 0;
  double eta = 0.0;
  double epsilon = 0.0;
};

std::string run_file_stem(const RunKey& key);

struct RunRecord {
  RunKey key;
  bool complete = true;
  std::string error;
  double final_loss = 0.0;  // full-batch loss at the final iterate; +inf if failed
  std::int64_t steps = 0;
  std::int64_t forwards = 0;
  std::string csv_path;
};

struct ExperimentResult {
  std::string out_dir;
  std::vector<RunRecord> runs;
  nlohmann::json summary;
  std::string summary_path;
};

// Output root: config's output_dir, unless FZOO_OUTPUT_ROOT is set, in which
// case outputs land under $FZOO_OUTPUT_ROOT/<output_dir>.
std::string resolve_output_root(const std::string& output_dir);

// Runs the whole grid (config.jobs runs in parallel) and writes all files.
// config_dir anchors relative dataset paths.
ExperimentResult run_experiment(const RunConfigFile& config,
                                const std::string& config_dir = "");

// Monte-Carlo identity checks behind `fzoo verify`. The table is a pure
// function of (samples, seed); workers only changes wall time.
struct VerifySuiteResult {
  std::string table;
  int checks = 0;
  int failed = 0;
  int inconclusive = 0;
  bool all_ok = false;  // no FAIL rows (INCONCLUSIVE does not fail the suite)
};

VerifySuiteResult run_verify_suite(std::int64_t samples, std::uint64_t seed,
                                   std::size_t workers = 1);

// Largest relative disagreement between the batched and sequential perturbed
// forwards over n_stacks randomly shaped 3-layer tanh stacks (8 directions).
double forward_engine_max_divergence(int n_stacks, std::uint64_t seed);

// CLI entry points; they print to stdout/stderr and return the process exit
// code (0 success, 1 runtime failure, 2 bad usage or config).
int cli_run(const std::string& config_path);
int cli_verify(std::int64_t samples, std::uint64_t seed, std::size_t workers);
int cli_resume(const std::string& checkpoint_path, const std::string& config_path);
int cli_dump(const std::string& checkpoint_path);

}  // namespace fzoo::harness
