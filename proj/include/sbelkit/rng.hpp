#pragma once

// Portable draws over mt19937_64. The std distributions and std::shuffle
// differ between standard libraries; these do not.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace sbelkit {

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine() % n); }
  bool chance(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[below(i)]);
  }
};

}  // namespace sbelkit
