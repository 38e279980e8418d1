#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fzoo/objectives.hpp"
#include "fzoo/param_vector.hpp"
#include "fzoo/perturbation.hpp"

namespace fzoo {

// An objective evaluation produced a non-finite value (or failed). `which`
// names the evaluation: "base", "plus", "minus", or "direction <k>";
// direction_index is k for perturbed evaluations and -1 otherwise.
struct EvaluationError : std::runtime_error {
  EvaluationError(const std::string& which_, int direction_index_)
      : std::runtime_error("objective evaluation failed at " + which_),
        which(which_),
        direction_index(direction_index_) {}
  std::string which;
  int direction_index;
};

// Two-point Gaussian estimate: ((L(theta+eps z) - L(theta-eps z)) / 2 eps) z,
// kept in projected form; dense(d) materializes the vector. Costs exactly two
// forward passes via perturb / double-step / restore on the same seed.
struct ClassicalZoEstimate {
  double projected = 0.0;
  DirectionSeed seed;
  double loss_plus = 0.0;
  double loss_minus = 0.0;
  int forward_passes = 2;

  std::vector<double> dense(std::size_t d) const;
};

ClassicalZoEstimate classical_zo_gradient(const Objective& objective,
                                          ParamVector& theta, const BatchSpec& batch,
                                          std::uint64_t gaussian_seed, double epsilon);

// Base loss plus the N losses at theta + eps*u_i. All values are finite; a
// non-finite evaluation raises EvaluationError naming the direction.
struct LossQueryResult {
  double base_loss = 0.0;
  std::vector<double> perturbed;
  std::vector<DirectionSeed> seeds;
  double epsilon = 0.0;
  std::size_t dim = 0;
};

enum class QueryEngine { kSequential, kBatched };

// Sequential: perturb / evaluate / restore per direction (theta is restored
// to within 1e-12 relative of its entry values). Batched: the objective's
// fused path when it has one, otherwise identical to sequential. Engine
// choice never changes a loss by more than ~1e-9 relative.
LossQueryResult query_losses(const Objective& objective, ParamVector& theta,
                             const BatchSpec& batch,
                             std::span<const DirectionSeed> seeds, double epsilon,
                             QueryEngine engine = QueryEngine::kSequential);

// Bessel-corrected standard deviation (two-pass, mean then centered squares).
// Purposely takes only the perturbed losses: the base loss never enters.
// Throws std::invalid_argument for fewer than 2 values.
double sigma_of(std::span<const double> losses);

// Smallest sigma ever used in a denominator; smaller sample deviations are
// degenerate (flat batch) and get flagged.
inline constexpr double kSigmaFloor = 1e-12;

// Loss-spread-normalized projected gradients:
//   projected_grads[i] = (l_i - l_0) / (N * max(sigma, kSigmaFloor))
// with N the number of perturbed losses in the query and sigma either the
// override (variance reuse) or sigma_of(perturbed).
struct FzooEstimate {
  std::vector<double> projected_grads;
  double sigma = 0.0;        // value before flooring
  bool sigma_floored = false;
  std::vector<DirectionSeed> seeds;
  double epsilon = 0.0;
  int forward_passes = 0;    // N + 1 for the query that produced this
};

FzooEstimate fzoo_estimate(const LossQueryResult& query,
                           std::optional<double> sigma_override = {});

// Dense direction-weighted difference estimate
//   g = (1/(eps N)) sum_i (l_i - l_0) u_i,
// i.e. the projected grads recombined: g = (sigma_eff/eps) sum_i pg_i u_i.
std::vector<double> reconstruct_g(const LossQueryResult& query);

}  // namespace fzoo
