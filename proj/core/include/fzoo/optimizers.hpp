#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fzoo/estimators.hpp"
#include "fzoo/objectives.hpp"
#include "fzoo/param_vector.hpp"

namespace fzoo {

enum class OptimizerKind : std::uint8_t {
  kFzoo = 0,           // N+1 forwards/step, sigma-normalized batched estimate
  kFzooR = 1,          // N/2+1 forwards/step, sigma reuses the previous step
  kZoSgd = 2,          // 2 forwards/step, two-point Gaussian estimate
  kNormalizedSgd = 3,  // gradient oracle, unit-length steps scaled by eta
  kSgd = 4,            // gradient oracle
  kAdam = 5,           // gradient oracle, beta1=0.9 beta2=0.999 eps=1e-8
};

const char* optimizer_kind_name(OptimizerKind kind);

bool is_zeroth_order(OptimizerKind kind);

// Forward-pass accounting per step. First-order steps are billed at 4
// forward-equivalents (one forward plus a backward costed at 3 forwards).
std::int64_t forwards_per_step(OptimizerKind kind, int n_directions);

struct Budget {
  enum class Unit { kSteps, kForwards };
  Unit unit = Unit::kForwards;
  std::int64_t amount = 0;  // >= 0; 0 means no steps
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kFzoo;
  double eta = 1e-3;
  double epsilon = 1e-3;       // zeroth-order kinds only
  int n_directions = 8;        // FZOO kinds; FZOO-R needs an even value >= 4
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t run_seed = 1;
  QueryEngine engine = QueryEngine::kSequential;

  // When set (FZOO kinds), the per-step rate is clipped so that
  // eta_t / sigma_t <= cap, i.e. eta_t = min(eta, cap * sigma_t).
  std::optional<double> eta_over_sigma_cap;
};

// Throws std::invalid_argument describing the offending field.
void validate_config(const OptimizerConfig& config, const Objective& objective);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

struct OptimizerState {
  ParamVector theta;
  std::int64_t step = 0;
  std::int64_t forward_passes = 0;
  std::int64_t degenerate_sigma_batches = 0;
  std::vector<double> previous_losses;  // FZOO-R reuse buffer
  AdamState adam;
};

struct StepReport {
  std::int64_t step = 0;  // 1-based index of the completed step
  double loss = 0.0;      // base loss for FZOO kinds, probe mean for two-point
  std::optional<double> sigma;
  double step_norm = 0.0;  // |delta theta|
  std::int64_t forward_passes = 0;  // cost of this step
  std::int64_t forward_cum = 0;     // state.forward_passes after this step
  std::optional<double> grad_norm;  // oracle diagnostic; not billed
};

StepReport fzoo_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state);
StepReport fzoo_r_step(const OptimizerConfig& config, const Objective& objective,
                       OptimizerState& state);
StepReport zo_sgd_step(const OptimizerConfig& config, const Objective& objective,
                       OptimizerState& state);
StepReport normalized_sgd_step(const OptimizerConfig& config, const Objective& objective,
                               OptimizerState& state);
StepReport sgd_step(const OptimizerConfig& config, const Objective& objective,
                    OptimizerState& state);
StepReport adam_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state);

StepReport take_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state);

using StepObserver = std::function<void(const StepReport&, const OptimizerState&)>;

struct RunResult {
  std::vector<StepReport> reports;
  OptimizerState state;
  bool complete = true;
  std::string error;
};

// Steps until the budget is exhausted (cumulative cost never exceeds the
// budget by more than one step's worth). A failing step stops the run with
// complete = false and the partial reports kept.
RunResult run(const OptimizerConfig& config, const Objective& objective,
              ParamVector theta0, const Budget& budget,
              const StepObserver& observer = {});

// Same loop, but continuing from a live state (e.g. a restored checkpoint).
// The budget is measured against the state's cumulative counters, so a run
// resumed mid-way performs exactly the remaining steps.
RunResult run_from(const OptimizerConfig& config, const Objective& objective,
                   OptimizerState state, const Budget& budget,
                   const StepObserver& observer = {});

}  // namespace fzoo
