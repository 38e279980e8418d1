#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fzoo/dataset.hpp"
#include "fzoo/forward_engine.hpp"
#include "fzoo/param_vector.hpp"
#include "fzoo/perturbation.hpp"

namespace fzoo {

// A loss function over (parameters, minibatch). Objectives are immutable
// after construction; evaluate never mutates the parameters or the dataset
// and may be called concurrently. Batch losses are means over the batch, so
// values are comparable across batch sizes.
struct Objective {
  std::string name;
  std::size_t dim = 0;
  std::size_t n_samples = 0;  // 0 for data-free objectives
  std::vector<LayerShape> shapes;

  std::function<double(const ParamVector&, const BatchSpec&)> evaluate;

  // Analytic gradient on the same batch; null when no oracle exists.
  std::function<std::vector<double>(const ParamVector&, const BatchSpec&)> gradient;

  // Optional fused path: losses at theta + eps*u_i for all directions via one
  // batched forward. Values match perturb-evaluate-restore to ~1e-9.
  std::function<std::vector<double>(const ParamVector&, const BatchSpec&,
                                    std::span<const DirectionSeed>, double)>
      batched_losses;

  // Upper bound on the gradient's Lipschitz constant, when known.
  std::optional<double> smoothness;
};

// L(theta) = c . theta. Gradient oracle c, smoothness 0.
Objective linear_objective(std::vector<double> c);

// L(theta) = 0.5 theta' A theta - b . theta with A symmetric positive
// definite. Smoothness hint is lambda_max(A) (power iteration for the dense
// case). Throws std::invalid_argument for non-SPD diagonals.
struct QuadraticSpec {
  enum class Kind { kIdentity, kDiagonal, kRandomSpd };
  Kind kind = Kind::kIdentity;
  std::size_t dim = 0;
  std::vector<double> diagonal;  // kDiagonal: entries must be > 0
  std::uint64_t seed = 0;        // kRandomSpd: A = G'G/d + 0.5 I, G ~ N(0,1)
  std::vector<double> b;         // empty = zero linear term
};
Objective quadratic_objective(const QuadraticSpec& spec);

// Chained Rosenbrock, d >= 2. Gradient oracle, no smoothness bound.
Objective rosenbrock_objective(std::size_t dim);

// Binary cross-entropy of a linear scorer over the batch plus (l2/2)|theta|^2.
// Labels must be exactly 0 or 1. Gradient oracle included.
Objective logistic_objective(std::shared_ptr<const Dataset> data, double l2 = 0.0);

// Score model for classification objectives: either a bare linear map or a
// one-hidden-layer tanh network. Weights flatten into the ParamVector in
// layer order (see LayerStack::shapes).
struct ScorerSpec {
  enum class Kind { kLinear, kMlp };
  Kind kind = Kind::kLinear;
  std::size_t classes = 2;
  std::size_t hidden = 8;  // kMlp only
  bool bias = true;
};
LayerStack make_scorer_stack(const ScorerSpec& spec, std::size_t input_dim);

// Mean 0-1 loss (1 - accuracy) of the scorer's argmax; ties go to the lowest
// class index. Labels must be integers in [0, classes). Piecewise constant,
// no gradient oracle. Includes the batched-forward loss path.
Objective zero_one_objective(std::shared_ptr<const Dataset> data,
                             const ScorerSpec& spec);

// Mean softmax cross-entropy of the scorer. Forward-only (no oracle); used
// to exercise multi-layer perturbed forwards end to end.
Objective mlp_softmax_objective(std::shared_ptr<const Dataset> data,
                                const ScorerSpec& spec);

// a * L + b with a > 0. Gradient and smoothness scale by a; the batched path
// is transformed pointwise.
Objective affine_transform(Objective inner, double a, double b);

}  // namespace fzoo
