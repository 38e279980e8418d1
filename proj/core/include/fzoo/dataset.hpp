#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fzoo {

// In-memory tabular dataset: row-major features plus one label per row.
struct Dataset {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // n * dim, row-major
  std::vector<double> labels;    // n
  std::vector<std::string> feature_names;
  std::string label_name = "y";

  double feature(std::size_t row, std::size_t col) const {
    return features[row * dim + col];
  }
};

// Comma-separated, UTF-8, mandatory header row, '.' decimal separator, no
// quoting. The label column is selected by header name. Parse failures throw
// std::runtime_error naming the data row (1-based, header excluded) and
// column. Round-trips through save_csv exactly (%.17g).
Dataset load_csv(const std::string& path, const std::string& label_column);
void save_csv(const Dataset& ds, const std::string& path);

// Two spherical Gaussian clusters with labels 0/1 (alternating rows), means
// +/- (separation/2)/sqrt(dim) per coordinate. Deterministic in `seed`.
Dataset two_gaussians(std::size_t n, std::size_t dim, double separation,
                      std::uint64_t seed);

// One minibatch: which rows to evaluate, and where the shuffle came from.
struct BatchSpec {
  std::vector<std::size_t> indices;
  std::uint64_t epoch = 0;
  std::uint64_t shuffle_seed = 0;
};

// All rows in order (epoch 0). For data-free objectives n may be 0.
BatchSpec full_batch(std::size_t n);

// Shuffled-epoch sampling without replacement. The permutation of epoch e is
// a pure function of (run_seed, e); batch `step` is the step-th consecutive
// slice, so consecutive batches within an epoch are disjoint, and a trailing
// partial slice (when batch_size does not divide n) is skipped. Throws if
// batch_size is 0 or exceeds n.
BatchSpec sample_batch(std::size_t n, std::size_t batch_size,
                       std::uint64_t run_seed, std::uint64_t step);

}  // namespace fzoo
