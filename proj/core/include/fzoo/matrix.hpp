#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fzoo {

// Minimal dense row-major matrix. All products in this library accumulate
// over the inner index in ascending order, so two routines that perform the
// same mathematical sum produce bitwise-identical doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

// a(r x k) * b(k x c), inner sum in ascending k per output element.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: " + std::to_string(a.cols) + " inner vs " +
                                std::to_string(b.rows) + " rows");
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double w = a.at(r, k);
      for (std::size_t c = 0; c < b.cols; ++c) {
        out.at(r, c) += w * b.at(k, c);
      }
    }
  }
  return out;
}

}  // namespace fzoo
