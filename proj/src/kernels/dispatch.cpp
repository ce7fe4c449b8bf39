#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "sbelkit/kernels.hpp"

namespace sbelkit::kernels {
namespace {

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::Scalar: return &scalar_table();
    case Backend::Avx2: return avx2_table();
    case Backend::Neon: return neon_table();
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("SBELKIT_KERNELS")) {
    std::string v(env);
    if (v == "scalar") return &scalar_table();
    if (v == "avx2" && cpu_supports(Backend::Avx2)) return avx2_table();
    if (v == "neon" && cpu_supports(Backend::Neon)) return neon_table();
  }
  if (cpu_supports(Backend::Avx2)) return avx2_table();
  if (cpu_supports(Backend::Neon)) return neon_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon: return neon_table() != nullptr;
  }
  return false;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Backend b) {
  if (!cpu_supports(b))
    throw std::invalid_argument("kernel backend unavailable: " + std::string(backend_name(b)));
  slot().store(table_for(b), std::memory_order_release);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

}  // namespace sbelkit::kernels
