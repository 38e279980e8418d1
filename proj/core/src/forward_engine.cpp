#include "fzoo/forward_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace fzoo {

namespace {

Matrix with_bias_row(const Matrix& a) {
  Matrix out(a.rows + 1, a.cols);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  for (std::size_t c = 0; c < a.cols; ++c) out.at(a.rows, c) = 1.0;
  return out;
}

void apply_activation(Matrix& m, Activation act) {
  if (act == Activation::kIdentity) return;
  for (double& v : m.data) v = std::tanh(v);
}

}  // namespace

std::size_t LayerStack::param_dim() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += l.w.rows * l.w.cols;
  return total;
}

std::vector<LayerShape> LayerStack::shapes() const {
  std::vector<LayerShape> out;
  out.reserve(layers.size());
  for (std::size_t j = 0; j < layers.size(); ++j) {
    out.push_back(LayerShape{"layer" + std::to_string(j), layers[j].w.rows,
                             layers[j].w.cols});
  }
  return out;
}

void validate_stack(const LayerStack& stack) {
  if (stack.layers.empty()) {
    throw std::invalid_argument("LayerStack: no layers");
  }
  for (std::size_t j = 0; j < stack.layers.size(); ++j) {
    const auto& l = stack.layers[j];
    if (l.w.rows == 0 || l.w.cols == 0) {
      throw std::invalid_argument("LayerStack: layer " + std::to_string(j) +
                                  " has an empty weight matrix");
    }
    if (j > 0) {
      const std::size_t expect = stack.layers[j - 1].w.rows + (l.has_bias ? 1 : 0);
      if (l.w.cols != expect) {
        throw std::invalid_argument(
            "LayerStack: layer " + std::to_string(j) + " expects input width " +
            std::to_string(l.w.cols) + " but the previous layer produces " +
            std::to_string(stack.layers[j - 1].w.rows));
      }
    }
  }
}

std::vector<double> flatten_weights(const LayerStack& stack) {
  std::vector<double> flat;
  flat.reserve(stack.param_dim());
  for (const auto& l : stack.layers) {
    flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
  }
  return flat;
}

void load_weights(LayerStack& stack, std::span<const double> flat) {
  if (flat.size() != stack.param_dim()) {
    throw std::invalid_argument("load_weights: got " + std::to_string(flat.size()) +
                                " values for " + std::to_string(stack.param_dim()) +
                                " weights");
  }
  std::size_t off = 0;
  for (auto& l : stack.layers) {
    std::copy(flat.begin() + off, flat.begin() + off + l.w.data.size(),
              l.w.data.begin());
    off += l.w.data.size();
  }
}

Matrix clean_forward(const LayerStack& stack, const Matrix& x) {
  validate_stack(stack);
  if (x.rows != stack.input_dim()) {
    throw std::invalid_argument("clean_forward: input has " + std::to_string(x.rows) +
                                " rows, stack expects " +
                                std::to_string(stack.input_dim()));
  }
  Matrix a = x;
  for (const auto& l : stack.layers) {
    a = matmul(l.w, l.has_bias ? with_bias_row(a) : a);
    apply_activation(a, l.act);
  }
  return a;
}

SignBlockSpec sign_block(const LayerStack& stack, const DirectionSeed& seed,
                         std::size_t layer_index) {
  if (layer_index >= stack.layers.size()) {
    throw std::invalid_argument("sign_block: layer index out of range");
  }
  if (seed.kind != DirectionKind::kRademacher) {
    throw std::invalid_argument("sign_block: sign blocks require a Rademacher seed");
  }
  SignBlockSpec spec;
  spec.seed = seed;
  for (std::size_t j = 0; j < layer_index; ++j) {
    spec.offset += stack.layers[j].w.rows * stack.layers[j].w.cols;
  }
  spec.rows = stack.layers[layer_index].w.rows;
  spec.cols = stack.layers[layer_index].w.cols;
  return spec;
}

Matrix sign_product(const SignBlockSpec& spec, const Matrix& y) {
  if (spec.cols != y.rows) {
    throw std::invalid_argument("sign_product: block has " + std::to_string(spec.cols) +
                                " columns, input has " + std::to_string(y.rows) +
                                " rows");
  }
  Matrix out(spec.rows, y.cols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t k = 0; k < spec.cols; ++k) {
      const std::uint64_t word =
          rng::SplitMix64::at(spec.seed.seed, spec.offset + r * spec.cols + k);
      if (word >> 63) {
        for (std::size_t c = 0; c < y.cols; ++c) out.at(r, c) += y.at(k, c);
      } else {
        for (std::size_t c = 0; c < y.cols; ++c) out.at(r, c) -= y.at(k, c);
      }
    }
  }
  return out;
}

std::vector<Matrix> sequential_perturbed_forward(const LayerStack& stack,
                                                 const Matrix& x,
                                                 std::span<const DirectionSeed> seeds,
                                                 double epsilon) {
  validate_stack(stack);
  std::vector<Matrix> out;
  out.reserve(seeds.size());
  for (const auto& seed : seeds) {
    LayerStack perturbed = stack;
    std::size_t entry = 0;
    for (auto& l : perturbed.layers) {
      for (double& w : l.w.data) {
        w += epsilon * direction_entry(seed, entry++);
      }
    }
    out.push_back(clean_forward(perturbed, x));
  }
  return out;
}

BatchedActivations batched_perturbed_forward(const LayerStack& stack,
                                             const Matrix& x,
                                             std::span<const DirectionSeed> seeds,
                                             double epsilon,
                                             std::size_t workers) {
  validate_stack(stack);
  if (x.rows != stack.input_dim()) {
    throw std::invalid_argument("batched_perturbed_forward: input has " +
                                std::to_string(x.rows) + " rows, stack expects " +
                                std::to_string(stack.input_dim()));
  }
  const std::size_t n = seeds.size();
  BatchedActivations acts;
  acts.slices.resize(n);
  if (n == 0) return acts;

  // The first layer's clean product is shared by every direction.
  const Matrix x0 = stack.layers.front().has_bias ? with_bias_row(x) : x;
  const Matrix first_clean = matmul(stack.layers.front().w, x0);

  auto run_direction = [&](std::size_t i) {
    SignBlockSpec block0 = sign_block(stack, seeds[i], 0);
    Matrix a = first_clean;
    if (epsilon != 0.0) {
      const Matrix p = sign_product(block0, x0);
      for (std::size_t e = 0; e < a.data.size(); ++e) {
        a.data[e] += epsilon * p.data[e];
      }
    }
    apply_activation(a, stack.layers.front().act);

    for (std::size_t j = 1; j < stack.layers.size(); ++j) {
      const Layer& l = stack.layers[j];
      const Matrix aj = l.has_bias ? with_bias_row(a) : std::move(a);
      Matrix z = matmul(l.w, aj);
      if (epsilon != 0.0) {
        const Matrix p = sign_product(sign_block(stack, seeds[i], j), aj);
        for (std::size_t e = 0; e < z.data.size(); ++e) {
          z.data[e] += epsilon * p.data[e];
        }
      }
      apply_activation(z, l.act);
      a = std::move(z);
    }
    acts.slices[i] = std::move(a);
  };

  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) run_direction(i);
    return acts;
  }

  // Each direction writes only its own slice, so any worker count produces
  // identical bytes.
  std::vector<std::thread> pool;
  const std::size_t used = std::min(workers, n);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += used) run_direction(i);
    });
  }
  for (auto& t : pool) t.join();
  return acts;
}

}  // namespace fzoo
