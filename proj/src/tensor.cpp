#include "sbelkit/tensor.hpp"

#include "sbelkit/kernels.hpp"

namespace sbelkit::linalg {

void matmul(const Matrix& a, std::size_t m, const Matrix& b, Matrix& c, bool accumulate) {
  assert(a.cols == b.rows && c.cols == b.cols && m <= a.rows && m <= c.rows);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data.data() + i * c.cols;
    if (!accumulate) std::fill(ci, ci + c.cols, 0.0);
    const double* ai = a.data.data() + i * a.cols;
    for (std::size_t p = 0; p < a.cols; ++p)
      if (ai[p] != 0.0) k.axpy(ai[p], b.data.data() + p * b.cols, ci, c.cols);
  }
}

void matmul_bt(const Matrix& a, std::size_t m, const Matrix& b, std::size_t n, Matrix& c, bool accumulate) {
  assert(a.cols == b.cols && m <= a.rows && n <= b.rows && m <= c.rows && n <= c.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data.data() + i * a.cols;
    double* ci = c.data.data() + i * c.cols;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = k.dot(ai, b.data.data() + j * b.cols, a.cols);
      ci[j] = accumulate ? ci[j] + v : v;
    }
  }
}

void matmul_at_acc(const Matrix& a, const Matrix& b, std::size_t m, Matrix& c) {
  assert(a.rows >= m && b.rows >= m && c.rows == a.cols && c.cols == b.cols);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data.data() + i * a.cols;
    const double* bi = b.data.data() + i * b.cols;
    for (std::size_t p = 0; p < a.cols; ++p)
      if (ai[p] != 0.0) k.axpy(ai[p], bi, c.data.data() + p * c.cols, c.cols);
  }
}

}  // namespace sbelkit::linalg
