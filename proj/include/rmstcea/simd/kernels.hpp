#pragma once

// Data-parallel inner loops shared by the Cox engine and the RMST/variance kernels.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2+FMA
// variant. The variant is chosen once at startup from CPUID; setting the environment
// variable RMSTCEA_SIMD=scalar forces the reference path.

#include <cstddef>
#include <span>

namespace rmstcea::simd {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);

/// Currently selected instruction set.
Isa active_isa();
/// Overrides the selection (tests and benchmarks). Throws if `isa` is unavailable.
void set_isa(Isa isa);

/// Profile-averaged survival moments at one cumulative-hazard value.
struct Moments {
  double survival = 0.0;  // sum_k w_k exp(-r_k L)
  double gamma = 0.0;     // sum_k w_k r_k exp(-r_k L)
};

struct KernelTable {
  /// v[i] <- exp(v[i]).
  void (*exp_inplace)(std::span<double> v);
  /// out[i] = sum_d beta[d] * x[d * n + i]   (x column-major, n = out.size()).
  void (*linear_predictor)(std::span<const double> x, std::span<const double> beta,
                           std::span<double> out);
  /// Survival moments over K atoms with risk r_k = exp(beta'x_k) and weights w_k.
  /// phi[d] = sum_k w_k x_kd r_k exp(-r_k L) with x column-major (p columns of K).
  Moments (*profile_moments)(std::span<const double> risk, std::span<const double> weight,
                             std::span<const double> x, double cumhaz, std::span<double> phi);
};

/// Kernel table for a specific instruction set.
const KernelTable& kernels(Isa isa);
/// Kernel table for the active instruction set.
const KernelTable& kernels();

inline void exp_inplace(std::span<double> v) { kernels().exp_inplace(v); }
inline void linear_predictor(std::span<const double> x, std::span<const double> beta,
                             std::span<double> out) {
  kernels().linear_predictor(x, beta, out);
}
inline Moments profile_moments(std::span<const double> risk, std::span<const double> weight,
                               std::span<const double> x, double cumhaz,
                               std::span<double> phi) {
  return kernels().profile_moments(risk, weight, x, cumhaz, phi);
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace rmstcea::simd
