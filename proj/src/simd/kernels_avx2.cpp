// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "rmstcea/simd/kernels.hpp"

namespace rmstcea::simd {
namespace {

constexpr double kLog2e = 1.4426950408889634073599;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpMax = 709.782712893384;
constexpr double kExpMin = -745.1332191019412;

// 2^n for integral-valued doubles n in [-1022, 1023].
inline __m256d pow2(__m256d n) {
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  __m256i bits = _mm256_castpd_si256(_mm256_add_pd(n, magic));
  bits = _mm256_sub_epi64(bits, _mm256_castpd_si256(magic));
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
}

// Cephes-style exp: x = n ln2 + r, |r| <= ln2/2, Pade form 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2)).
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(kExpMax);
  const __m256d lo = _mm256_set1_pd(kExpMin);
  const __m256d over = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  const __m256d nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878e-4), rr,
                              _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042e-6), rr,
                              _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009e0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // Split the scale so subnormal results and n = 1024 stay representable.
  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  e = _mm256_mul_pd(_mm256_mul_pd(e, pow2(n1)), pow2(n2));

  e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), over);
  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), under);
  return _mm256_blendv_pd(e, x, nan);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void exp_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(v.data() + i, exp_pd(_mm256_loadu_pd(v.data() + i)));
  if (i < n) {
    alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = i; k < n; ++k) buf[k - i] = v[k];
    _mm256_store_pd(buf, exp_pd(_mm256_load_pd(buf)));
    for (std::size_t k = i; k < n; ++k) v[k] = buf[k - i];
  }
}

void linear_predictor(std::span<const double> x, std::span<const double> beta,
                      std::span<double> out) {
  const std::size_t n = out.size();
  const std::size_t p = beta.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < p; ++d) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(beta[d]), _mm256_loadu_pd(x.data() + d * n + i), acc);
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < p; ++d) acc = std::fma(beta[d], x[d * n + i], acc);
    out[i] = acc;
  }
}

Moments profile_moments(std::span<const double> risk, std::span<const double> weight,
                        std::span<const double> x, double cumhaz, std::span<double> phi) {
  const std::size_t k_atoms = risk.size();
  const std::size_t p = phi.size();
  thread_local std::vector<double> phi_acc;
  phi_acc.assign(4 * p, 0.0);
  __m256d surv = _mm256_setzero_pd();
  __m256d gamma = _mm256_setzero_pd();
  const __m256d neg_l = _mm256_set1_pd(-cumhaz);
  std::size_t k = 0;
  for (; k + 4 <= k_atoms; k += 4) {
    const __m256d r = _mm256_loadu_pd(risk.data() + k);
    const __m256d ws = _mm256_mul_pd(_mm256_loadu_pd(weight.data() + k), exp_pd(_mm256_mul_pd(r, neg_l)));
    const __m256d g = _mm256_mul_pd(ws, r);
    surv = _mm256_add_pd(surv, ws);
    gamma = _mm256_add_pd(gamma, g);
    for (std::size_t d = 0; d < p; ++d) {
      double* acc = phi_acc.data() + 4 * d;
      _mm256_storeu_pd(acc, _mm256_fmadd_pd(g, _mm256_loadu_pd(x.data() + d * k_atoms + k), _mm256_loadu_pd(acc)));
    }
  }
  Moments m{hsum(surv), hsum(gamma)};
  for (std::size_t d = 0; d < p; ++d) phi[d] = hsum(_mm256_loadu_pd(phi_acc.data() + 4 * d));
  for (; k < k_atoms; ++k) {
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

const KernelTable* detail::avx2_table() { return &kTable; }

}  // namespace rmstcea::simd
