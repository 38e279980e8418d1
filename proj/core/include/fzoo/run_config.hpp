#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fzoo/objectives.hpp"
#include "fzoo/optimizers.hpp"

// Experiment configuration: one JSON file drives objective construction,
// optimizer grids, seeds, budget, and output layout. Parse errors name the
// offending field.

namespace fzoo {

struct ThetaInitSpec {
  enum class Kind { kZeros, kGaussian, kExplicit };
  Kind kind = Kind::kZeros;
  std::uint64_t seed = 0;  // kGaussian: per-run stream is (seed, run_seed)
  double scale = 1.0;
  std::vector<double> values;  // kExplicit
};

struct DatasetSpec {
  bool from_file = false;
  std::string path;          // from_file
  std::string label_column = "y";
  std::string generator;     // "two_gaussians"
  std::size_t n = 0;
  std::size_t dim = 0;
  double separation = 4.0;
  std::uint64_t seed = 0;
};

struct ObjectiveSpec {
  std::string type;  // linear|quadratic|rosenbrock|logistic|zero_one|mlp_softmax
  std::vector<double> c;  // linear
  QuadraticSpec quad;     // quadratic
  std::size_t dim = 0;    // rosenbrock
  double l2 = 0.0;        // logistic
  ScorerSpec scorer;      // zero_one / mlp_softmax
};

struct OptimizerEntry {
  std::string name;
  OptimizerKind kind = OptimizerKind::kFzoo;
  std::vector<double> eta_grid;      // a bare "eta" is a one-point grid
  std::vector<double> epsilon_grid;  // zeroth-order kinds; {0} otherwise
  int n_directions = 8;
  std::size_t batch_size = 0;
  QueryEngine engine = QueryEngine::kSequential;
  std::optional<double> eta_over_sigma_cap;
};

struct RunConfigFile {
  std::string experiment;
  ObjectiveSpec objective;
  std::optional<DatasetSpec> dataset;
  ThetaInitSpec theta0;
  std::vector<OptimizerEntry> optimizers;
  Budget budget;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "results";
  int checkpoint_every = 0;  // steps; 0 disables checkpoints
  int jobs = 1;
};

RunConfigFile parse_run_config(const nlohmann::json& j);
RunConfigFile load_run_config(const std::string& path);

struct BuiltObjective {
  Objective objective;
  std::shared_ptr<const Dataset> dataset;  // null for data-free objectives
};

// config_dir anchors relative dataset paths.
BuiltObjective build_objective(const RunConfigFile& config,
                               const std::string& config_dir);

// Per-run starting point; gaussian inits draw a fresh stream per run seed.
ParamVector initial_theta(const RunConfigFile& config, const Objective& objective,
                          std::uint64_t run_seed);

}  // namespace fzoo
