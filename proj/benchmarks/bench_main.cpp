#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "fzoo/forward_engine.hpp"
#include "fzoo/objectives.hpp"
#include "fzoo/optimizers.hpp"
#include "fzoo/perturbation.hpp"
#include "fzoo/rng.hpp"

namespace {

using namespace fzoo;

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                       double scale) {
  Matrix m(rows, cols);
  rng::SplitMix64 stream(seed);
  for (double& v : m.data) {
    v = scale * rng::inverse_normal_cdf(rng::u01(stream.next()));
  }
  return m;
}

LayerStack tanh_stack(std::size_t dim, std::uint64_t seed) {
  LayerStack stack;
  for (int l = 0; l < 3; ++l) {
    Layer layer;
    layer.w = gaussian_matrix(dim, dim, seed + static_cast<std::uint64_t>(l), 0.3);
    layer.act = Activation::kTanh;
    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

void BM_FillDirectionRademacher(benchmark::State& state) {
  std::vector<double> u(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    fill_direction(DirectionSeed{seed++, DirectionKind::kRademacher}, u);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FillDirectionRademacher)->Arg(1024)->Arg(65536);

void BM_FillDirectionGaussian(benchmark::State& state) {
  std::vector<double> u(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    fill_direction(DirectionSeed{seed++, DirectionKind::kGaussian}, u);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FillDirectionGaussian)->Arg(1024)->Arg(65536);

// Signed accumulation of activation rows...
void BM_SignProduct(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const LayerStack stack = tanh_stack(dim, 7);
  const Matrix y = gaussian_matrix(dim, 8, 99, 1.0);
  const DirectionSeed seed{42, DirectionKind::kRademacher};
  const SignBlockSpec spec = sign_block(stack, seed, 1);
  for (auto _ : state) {
    Matrix out = sign_product(spec, y);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_SignProduct)->Arg(64)->Arg(256);

// ...versus materializing the +/-1 block and running a dense multiply.
void BM_DenseSignMatmul(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const LayerStack stack = tanh_stack(dim, 7);
  const Matrix y = gaussian_matrix(dim, 8, 99, 1.0);
  const DirectionSeed seed{42, DirectionKind::kRademacher};
  const SignBlockSpec spec = sign_block(stack, seed, 1);
  for (auto _ : state) {
    Matrix s(spec.rows, spec.cols);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
      s.data[i] = direction_entry(spec.seed, spec.offset + i);
    }
    Matrix out = matmul(s, y);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_DenseSignMatmul)->Arg(64)->Arg(256);

void BM_SequentialPerturbedForward(benchmark::State& state) {
  const LayerStack stack = tanh_stack(64, 3);
  const Matrix x = gaussian_matrix(64, 16, 5, 1.0);
  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 8; ++i) {
    seeds.push_back(DirectionSeed{100 + i, DirectionKind::kRademacher});
  }
  for (auto _ : state) {
    const std::vector<Matrix> out =
        sequential_perturbed_forward(stack, x, seeds, 1e-3);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_SequentialPerturbedForward);

void BM_BatchedPerturbedForward(benchmark::State& state) {
  const LayerStack stack = tanh_stack(64, 3);
  const Matrix x = gaussian_matrix(64, 16, 5, 1.0);
  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 8; ++i) {
    seeds.push_back(DirectionSeed{100 + i, DirectionKind::kRademacher});
  }
  for (auto _ : state) {
    const BatchedActivations out = batched_perturbed_forward(stack, x, seeds, 1e-3);
    benchmark::DoNotOptimize(out.slices.data());
  }
}
BENCHMARK(BM_BatchedPerturbedForward);

void BM_FzooStep(benchmark::State& state) {
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kRandomSpd;
  spec.dim = 128;
  spec.seed = 3;
  const Objective obj = quadratic_objective(spec);
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 1e-3;
  config.epsilon = 1e-4;
  config.n_directions = 8;
  OptimizerState st{ParamVector::zeros(128)};
  st.theta.values()[0] = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fzoo_step(config, obj, st));
  }
}
BENCHMARK(BM_FzooStep);

void BM_TwoPointStep(benchmark::State& state) {
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kRandomSpd;
  spec.dim = 128;
  spec.seed = 3;
  const Objective obj = quadratic_objective(spec);
  OptimizerConfig config;
  config.kind = OptimizerKind::kZoSgd;
  config.eta = 1e-3;
  config.epsilon = 1e-4;
  OptimizerState st{ParamVector::zeros(128)};
  st.theta.values()[0] = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(zo_sgd_step(config, obj, st));
  }
}
BENCHMARK(BM_TwoPointStep);

}  // namespace

BENCHMARK_MAIN();
