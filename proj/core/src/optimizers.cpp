#include "fzoo/optimizers.hpp"

#include <cmath>
#include <stdexcept>

#include "fzoo/rng.hpp"

namespace fzoo {

namespace {

BatchSpec step_batch(const OptimizerConfig& config, const Objective& objective,
                     std::int64_t step) {
  if (objective.n_samples == 0 || config.batch_size == 0 ||
      config.batch_size >= objective.n_samples) {
    return full_batch(objective.n_samples);
  }
  return sample_batch(objective.n_samples, config.batch_size, config.run_seed,
                      static_cast<std::uint64_t>(step));
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

std::optional<double> grad_norm_diagnostic(const Objective& objective,
                                           const ParamVector& theta,
                                           const BatchSpec& batch) {
  if (!objective.gradient) return std::nullopt;
  return norm2(objective.gradient(theta, batch));
}

double update_norm(const std::vector<double>& before, const ParamVector& after) {
  double s = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = after.values()[i] - before[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<DirectionSeed> step_direction_seeds(std::uint64_t run_seed,
                                                std::int64_t step, int count) {
  std::vector<DirectionSeed> seeds;
  seeds.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    seeds.push_back(DirectionSeed{
        rng::direction_stream_seed(run_seed, static_cast<std::uint64_t>(step),
                                   static_cast<std::uint64_t>(i)),
        DirectionKind::kRademacher});
  }
  return seeds;
}

// Shared tail of the two FZOO variants: normalize, cap, update, report.
StepReport finish_fzoo_step(const OptimizerConfig& config, const Objective& objective,
                            OptimizerState& state, const LossQueryResult& query,
                            const FzooEstimate& est, const BatchSpec& batch) {
  if (est.sigma_floored) ++state.degenerate_sigma_batches;

  double eta_t = config.eta;
  if (config.eta_over_sigma_cap) {
    eta_t = std::min(eta_t, *config.eta_over_sigma_cap *
                                std::max(est.sigma, kSigmaFloor));
  }
  std::vector<double> coeffs(est.projected_grads.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    coeffs[i] = eta_t * est.projected_grads[i];
  }

  StepReport report;
  report.grad_norm = grad_norm_diagnostic(objective, state.theta, batch);

  const std::vector<double> before = state.theta.values();
  apply_update_from_seeds(state.theta, est.seeds, coeffs);

  report.loss = query.base_loss;
  report.sigma = est.sigma;
  report.step_norm = update_norm(before, state.theta);
  report.forward_passes = est.forward_passes;
  state.forward_passes += report.forward_passes;
  report.forward_cum = state.forward_passes;
  report.step = ++state.step;
  return report;
}

}  // namespace

const char* optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kFzoo: return "fzoo";
    case OptimizerKind::kFzooR: return "fzoo_r";
    case OptimizerKind::kZoSgd: return "zo_sgd";
    case OptimizerKind::kNormalizedSgd: return "normalized_sgd";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
  }
  return "unknown";
}

bool is_zeroth_order(OptimizerKind kind) {
  return kind == OptimizerKind::kFzoo || kind == OptimizerKind::kFzooR ||
         kind == OptimizerKind::kZoSgd;
}

std::int64_t forwards_per_step(OptimizerKind kind, int n_directions) {
  switch (kind) {
    case OptimizerKind::kFzoo: return n_directions + 1;
    case OptimizerKind::kFzooR: return n_directions / 2 + 1;
    case OptimizerKind::kZoSgd: return 2;
    case OptimizerKind::kNormalizedSgd:
    case OptimizerKind::kSgd:
    case OptimizerKind::kAdam: return 4;
  }
  return 0;
}

void validate_config(const OptimizerConfig& config, const Objective& objective) {
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) {
    throw std::invalid_argument("optimizer config: eta must be positive");
  }
  if (is_zeroth_order(config.kind) &&
      (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon))) {
    throw std::invalid_argument("optimizer config: epsilon must be positive");
  }
  if (config.kind == OptimizerKind::kFzoo && config.n_directions < 2) {
    throw std::invalid_argument("optimizer config: fzoo needs n_directions >= 2");
  }
  if (config.kind == OptimizerKind::kFzooR &&
      (config.n_directions < 4 || config.n_directions % 2 != 0)) {
    // The reuse variant queries N/2 fresh directions and needs at least two
    // of them on the very first step, where no stored losses exist yet.
    throw std::invalid_argument(
        "optimizer config: fzoo_r needs an even n_directions >= 4");
  }
  if (!is_zeroth_order(config.kind) && !objective.gradient) {
    throw std::invalid_argument(std::string("optimizer config: ") +
                                optimizer_kind_name(config.kind) +
                                " requires a gradient oracle, and objective '" +
                                objective.name + "' has none");
  }
  if (objective.n_samples > 0 && config.batch_size > objective.n_samples) {
    throw std::invalid_argument("optimizer config: batch_size exceeds dataset size");
  }
  if (config.eta_over_sigma_cap &&
      (!(*config.eta_over_sigma_cap > 0.0) ||
       !std::isfinite(*config.eta_over_sigma_cap))) {
    throw std::invalid_argument("optimizer config: eta_over_sigma_cap must be positive");
  }
}

StepReport fzoo_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state) {
  const BatchSpec batch = step_batch(config, objective, state.step);
  const std::vector<DirectionSeed> seeds =
      step_direction_seeds(config.run_seed, state.step, config.n_directions);
  const LossQueryResult query = query_losses(objective, state.theta, batch, seeds,
                                             config.epsilon, config.engine);
  const FzooEstimate est = fzoo_estimate(query);
  return finish_fzoo_step(config, objective, state, query, est, batch);
}

StepReport fzoo_r_step(const OptimizerConfig& config, const Objective& objective,
                       OptimizerState& state) {
  const int half = config.n_directions / 2;
  const BatchSpec batch = step_batch(config, objective, state.step);
  const std::vector<DirectionSeed> seeds =
      step_direction_seeds(config.run_seed, state.step, half);
  const LossQueryResult query = query_losses(objective, state.theta, batch, seeds,
                                             config.epsilon, config.engine);

  // Spread over fresh + stored losses once history exists; the projected
  // grads always divide by the fresh count (N/2).
  double sigma;
  if (state.previous_losses.empty()) {
    sigma = sigma_of(query.perturbed);
  } else {
    std::vector<double> pool = query.perturbed;
    pool.insert(pool.end(), state.previous_losses.begin(),
                state.previous_losses.end());
    sigma = sigma_of(pool);
  }
  const FzooEstimate est = fzoo_estimate(query, sigma);
  StepReport report = finish_fzoo_step(config, objective, state, query, est, batch);
  state.previous_losses = query.perturbed;
  return report;
}

StepReport zo_sgd_step(const OptimizerConfig& config, const Objective& objective,
                       OptimizerState& state) {
  const BatchSpec batch = step_batch(config, objective, state.step);
  StepReport report;
  report.grad_norm = grad_norm_diagnostic(objective, state.theta, batch);

  const std::uint64_t seed = rng::gaussian_stream_seed(
      config.run_seed, static_cast<std::uint64_t>(state.step));
  const ClassicalZoEstimate est =
      classical_zo_gradient(objective, state.theta, batch, seed, config.epsilon);

  const std::vector<double> before = state.theta.values();
  const DirectionSeed seeds[1] = {est.seed};
  const double coeffs[1] = {config.eta * est.projected};
  apply_update_from_seeds(state.theta, seeds, coeffs);

  report.loss = 0.5 * (est.loss_plus + est.loss_minus);
  report.step_norm = update_norm(before, state.theta);
  report.forward_passes = est.forward_passes;
  state.forward_passes += report.forward_passes;
  report.forward_cum = state.forward_passes;
  report.step = ++state.step;
  return report;
}

namespace {

// Shared skeleton of the oracle-based steps; `direction` fills the update
// vector delta so that theta -= delta.
template <typename DirectionFn>
StepReport first_order_step(const OptimizerConfig& config, const Objective& objective,
                            OptimizerState& state, DirectionFn direction) {
  const BatchSpec batch = step_batch(config, objective, state.step);
  StepReport report;
  report.loss = objective.evaluate(state.theta, batch);
  if (!std::isfinite(report.loss)) throw EvaluationError("base", -1);
  std::vector<double> g = objective.gradient(state.theta, batch);
  report.grad_norm = norm2(g);

  const std::vector<double> before = state.theta.values();
  direction(g);  // g becomes the descent update
  for (std::size_t i = 0; i < g.size(); ++i) state.theta.values()[i] -= g[i];
  if (!state.theta.all_finite()) {
    throw std::runtime_error("step produced non-finite parameters");
  }

  report.step_norm = update_norm(before, state.theta);
  report.forward_passes = forwards_per_step(config.kind, config.n_directions);
  state.forward_passes += report.forward_passes;
  report.forward_cum = state.forward_passes;
  report.step = ++state.step;
  return report;
}

}  // namespace

StepReport normalized_sgd_step(const OptimizerConfig& config, const Objective& objective,
                               OptimizerState& state) {
  return first_order_step(config, objective, state, [&](std::vector<double>& g) {
    const double n = norm2(g);
    if (n < 1e-15) {  // no direction to follow
      for (double& v : g) v = 0.0;
      return;
    }
    for (double& v : g) v *= config.eta / n;
  });
}

StepReport sgd_step(const OptimizerConfig& config, const Objective& objective,
                    OptimizerState& state) {
  return first_order_step(config, objective, state, [&](std::vector<double>& g) {
    for (double& v : g) v *= config.eta;
  });
}

StepReport adam_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  return first_order_step(config, objective, state, [&](std::vector<double>& g) {
    auto& adam = state.adam;
    if (adam.m.empty()) {
      adam.m.assign(g.size(), 0.0);
      adam.v.assign(g.size(), 0.0);
    }
    const auto t = static_cast<double>(state.step + 1);
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      adam.m[i] = kBeta1 * adam.m[i] + (1.0 - kBeta1) * g[i];
      adam.v[i] = kBeta2 * adam.v[i] + (1.0 - kBeta2) * g[i] * g[i];
      const double mhat = adam.m[i] / c1;
      const double vhat = adam.v[i] / c2;
      g[i] = config.eta * mhat / (std::sqrt(vhat) + kEps);
    }
  });
}

StepReport take_step(const OptimizerConfig& config, const Objective& objective,
                     OptimizerState& state) {
  switch (config.kind) {
    case OptimizerKind::kFzoo: return fzoo_step(config, objective, state);
    case OptimizerKind::kFzooR: return fzoo_r_step(config, objective, state);
    case OptimizerKind::kZoSgd: return zo_sgd_step(config, objective, state);
    case OptimizerKind::kNormalizedSgd:
      return normalized_sgd_step(config, objective, state);
    case OptimizerKind::kSgd: return sgd_step(config, objective, state);
    case OptimizerKind::kAdam: return adam_step(config, objective, state);
  }
  throw std::invalid_argument("take_step: unknown optimizer kind");
}

RunResult run(const OptimizerConfig& config, const Objective& objective,
              ParamVector theta0, const Budget& budget,
              const StepObserver& observer) {
  return run_from(config, objective, OptimizerState{std::move(theta0)}, budget,
                  observer);
}

RunResult run_from(const OptimizerConfig& config, const Objective& objective,
                   OptimizerState state, const Budget& budget,
                   const StepObserver& observer) {
  validate_config(config, objective);
  if (budget.amount < 0) {
    throw std::invalid_argument("run: budget must be >= 0");
  }
  if (state.theta.dim() != objective.dim) {
    throw std::invalid_argument("run: theta has dimension " +
                                std::to_string(state.theta.dim()) +
                                ", objective needs " + std::to_string(objective.dim));
  }
  RunResult result{{}, std::move(state), true, {}};
  while (true) {
    const std::int64_t used = budget.unit == Budget::Unit::kSteps
                                  ? result.state.step
                                  : result.state.forward_passes;
    if (used >= budget.amount) break;
    StepReport report;
    try {
      report = take_step(config, objective, result.state);
    } catch (const std::exception& e) {
      result.complete = false;
      result.error = e.what();
      break;
    }
    result.reports.push_back(report);
    if (observer) observer(report, result.state);
  }
  return result;
}

}  // namespace fzoo
