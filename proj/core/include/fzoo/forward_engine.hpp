#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fzoo/matrix.hpp"
#include "fzoo/param_vector.hpp"
#include "fzoo/perturbation.hpp"

// Perturbed forward passes over a stack of dense layers.
//
// Perturbing a stack by eps in direction u means adding eps * S to every
// weight matrix, where the sign blocks S are carved from the flat direction
// u in layer order (row-major within a layer). The reference path
// materializes W + eps*S per direction and runs a plain forward. The batched
// path never materializes perturbed weights: it reuses the clean product
// W*a and adds eps * (S*a), where S*a is a signed accumulation of rows of a
// (no multiplications by +/-1). The two paths reorganize the same sums, so
// they agree to ~1e-12 and are interchangeable for loss queries.

namespace fzoo {

enum class Activation : std::uint8_t { kIdentity = 0, kTanh = 1 };

struct Layer {
  Matrix w;  // (out x in), or (out x in+1) when has_bias
  Activation act = Activation::kTanh;
  bool has_bias = false;  // input gets a fixed trailing 1-row
};

struct LayerStack {
  std::vector<Layer> layers;

  std::size_t input_dim() const {
    if (layers.empty()) return 0;
    return layers.front().w.cols - (layers.front().has_bias ? 1 : 0);
  }
  std::size_t output_dim() const {
    return layers.empty() ? 0 : layers.back().w.rows;
  }
  std::size_t param_dim() const;

  // Flattening contract shared with ParamVector: one block per layer, in
  // layer order, each block row-major over the weight matrix.
  std::vector<LayerShape> shapes() const;
};

// Consistency between consecutive layer widths; throws on mismatch.
void validate_stack(const LayerStack& stack);

// Weights <-> flat vector under the shapes() contract.
std::vector<double> flatten_weights(const LayerStack& stack);
void load_weights(LayerStack& stack, std::span<const double> flat);

// Unperturbed forward: a_j = act(W_j * [a_{j-1}; 1]).
Matrix clean_forward(const LayerStack& stack, const Matrix& x);

// Identifies one layer's sign block inside a flat direction.
struct SignBlockSpec {
  DirectionSeed seed;
  std::size_t offset = 0;  // first entry of the block in the flat direction
  std::size_t rows = 0;
  std::size_t cols = 0;
};

SignBlockSpec sign_block(const LayerStack& stack, const DirectionSeed& seed,
                         std::size_t layer_index);

// S * y where S is the +/-1 block named by spec; adds or subtracts rows of y,
// accumulating over the inner index ascending, which matches matmul exactly.
Matrix sign_product(const SignBlockSpec& spec, const Matrix& y);

// Final-layer activations, one (out x batch) slice per direction.
struct BatchedActivations {
  std::vector<Matrix> slices;

  std::size_t n_directions() const { return slices.size(); }
};

// Reference path: per direction, materialize W + eps*S for every layer and
// run a plain forward on a scratch copy of the stack.
std::vector<Matrix> sequential_perturbed_forward(const LayerStack& stack,
                                                 const Matrix& x,
                                                 std::span<const DirectionSeed> seeds,
                                                 double epsilon);

// Shared-term path: layer 1 computes the clean product once for all
// directions; every layer adds eps * (S_i * a_i) to the clean product before
// the activation. Direction slices are independent, so `workers` > 1 splits
// them across threads without changing any result.
BatchedActivations batched_perturbed_forward(const LayerStack& stack,
                                             const Matrix& x,
                                             std::span<const DirectionSeed> seeds,
                                             double epsilon,
                                             std::size_t workers = 1);

}  // namespace fzoo
