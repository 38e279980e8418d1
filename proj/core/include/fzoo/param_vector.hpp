#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fzoo {

// One named block of a flattened parameter vector. For a weight matrix the
// block is stored row-major; a plain vector is a (d x 1) block.
struct LayerShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
};

// Flat parameter vector with per-block shape metadata. Directions generated
// against a ParamVector are carved into per-block sign matrices using the
// block order and row-major layout recorded here.
class ParamVector {
 public:
  ParamVector(std::vector<double> values, std::vector<LayerShape> shapes)
      : values_(std::move(values)), shapes_(std::move(shapes)) {
    std::size_t total = 0;
    for (const auto& s : shapes_) {
      if (s.rows == 0 || s.cols == 0) {
        throw std::invalid_argument("ParamVector: empty block '" + s.name + "'");
      }
      total += s.size();
    }
    if (values_.empty()) {
      throw std::invalid_argument("ParamVector: dimension must be positive");
    }
    if (total != values_.size()) {
      throw std::invalid_argument(
          "ParamVector: shape metadata covers " + std::to_string(total) +
          " entries but the vector has " + std::to_string(values_.size()));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("ParamVector: non-finite entry");
      }
    }
  }

  // A single unnamed block, for objectives whose parameter is just a vector.
  static ParamVector flat(std::vector<double> values,
                          std::string name = "theta") {
    const std::size_t n = values.size();
    return ParamVector(std::move(values),
                       {LayerShape{std::move(name), n, 1}});
  }

  static ParamVector zeros(std::size_t d, std::string name = "theta") {
    return flat(std::vector<double>(d, 0.0), std::move(name));
  }

  std::size_t dim() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }

  // Offset of block `index` within the flat vector.
  std::size_t block_offset(std::size_t index) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < index; ++k) off += shapes_[k].size();
    return off;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::vector<double> values_;
  std::vector<LayerShape> shapes_;
};

}  // namespace fzoo
