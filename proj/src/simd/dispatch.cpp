#include <atomic>
#include <cstdlib>
#include <string_view>

#include "rmstcea/error.hpp"
#include "rmstcea/simd/kernels.hpp"

namespace rmstcea::simd {

#if !defined(RMSTCEA_HAVE_AVX2)
const KernelTable* detail::avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(RMSTCEA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  if (const char* env = std::getenv("RMSTCEA_SIMD")) {
    if (std::string_view(env) == "scalar") return Isa::Scalar;
  }
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return detail::avx2_table() != nullptr && cpu_has_avx2();
}

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw PreconditionError(std::string("SIMD variant unavailable: ") + isa_name(isa));
  selected().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) {
  if (isa == Isa::Avx2 && detail::avx2_table() != nullptr) return *detail::avx2_table();
  return detail::scalar_table();
}

const KernelTable& kernels() { return kernels(active_isa()); }

}  // namespace rmstcea::simd
