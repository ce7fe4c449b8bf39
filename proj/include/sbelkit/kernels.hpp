#pragma once

// Dense double-precision kernels behind the reference encoder.
//
// Every kernel has a portable scalar reference implementation. Vector
// variants (AVX2+FMA on x86-64, NEON on AArch64) are compiled alongside it
// and one backend is selected at runtime from CPU capabilities. The
// environment variable SBELKIT_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace sbelkit::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  Backend backend;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
// Null when the variant was not compiled in for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool cpu_supports(Backend b);

// The table used by the free functions below. Chosen once on first use.
const KernelTable& active();
// Override the active backend. Throws std::invalid_argument when the CPU
// or build cannot run it.
void select(Backend b);
std::string_view backend_name(Backend b);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}
inline void add(std::span<const double> x, std::span<double> y) {
  active().add(x.data(), y.data(), x.size());
}

}  // namespace sbelkit::kernels
