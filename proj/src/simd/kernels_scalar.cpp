#include <cmath>

#include "rmstcea/simd/kernels.hpp"

namespace rmstcea::simd {
namespace {

void exp_inplace(std::span<double> v) {
  for (double& x : v) x = std::exp(x);
}

void linear_predictor(std::span<const double> x, std::span<const double> beta,
                      std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t d = 0; d < beta.size(); ++d) {
    const double b = beta[d];
    const double* col = x.data() + d * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += b * col[i];
  }
}

Moments profile_moments(std::span<const double> risk, std::span<const double> weight,
                        std::span<const double> x, double cumhaz, std::span<double> phi) {
  const std::size_t k_atoms = risk.size();
  const std::size_t p = phi.size();
  for (std::size_t d = 0; d < p; ++d) phi[d] = 0.0;
  Moments m;
  for (std::size_t k = 0; k < k_atoms; ++k) {
    const double ws = weight[k] * std::exp(-risk[k] * cumhaz);
    const double g = ws * risk[k];
    m.survival += ws;
    m.gamma += g;
    for (std::size_t d = 0; d < p; ++d) phi[d] += g * x[d * k_atoms + k];
  }
  return m;
}

constexpr KernelTable kTable{&exp_inplace, &linear_predictor, &profile_moments};

}  // namespace

const KernelTable& detail::scalar_table() { return kTable; }

}  // namespace rmstcea::simd
