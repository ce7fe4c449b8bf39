#pragma once

// Row-major double matrices and the handful of products the encoder needs.
// Products take explicit row counts so callers can work on a leading block
// of rows without copying.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace sbelkit {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool operator==(const Matrix&) const = default;
};

namespace linalg {

// C[0:m] (+)= A[0:m] * B        A: m x k, B: k x n
void matmul(const Matrix& a, std::size_t m, const Matrix& b, Matrix& c, bool accumulate = false);
// C[0:m] (+)= A[0:m] * B^T      A: m x k, B: n x k  (n = b.rows)
void matmul_bt(const Matrix& a, std::size_t m, const Matrix& b, std::size_t n, Matrix& c,
               bool accumulate = false);
// C += A[0:m]^T * B[0:m]        A: m x k, B: m x n, C: k x n
void matmul_at_acc(const Matrix& a, const Matrix& b, std::size_t m, Matrix& c);

}  // namespace linalg
}  // namespace sbelkit
