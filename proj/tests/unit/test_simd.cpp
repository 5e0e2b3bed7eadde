#include "helpers.hpp"

#include "rmstcea/rmst.hpp"
#include "rmstcea/simd/kernels.hpp"

using namespace rmstcea;
namespace simd = rmstcea::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

struct IsaGuard {
  simd::Isa saved = simd::active_isa();
  ~IsaGuard() { simd::set_isa(saved); }
};

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar is always available") {
  CHECK(simd::isa_available(simd::Isa::Scalar));
  CHECK(std::string(simd::isa_name(simd::Isa::Scalar)) == "scalar");
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::isa_available(simd::Isa::Avx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence not exercised");
    return;
  }
  const auto& ref = simd::kernels(simd::Isa::Scalar);
  const auto& vec = simd::kernels(simd::Isa::Avx2);
  std::mt19937_64 gen(42);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    auto a = random_vector(gen, n, -700.0, 700.0);
    auto b = a;
    ref.exp_inplace(a);
    vec.exp_inplace(b);
    for (std::size_t i = 0; i < n; ++i) CHECK(testing::close_rel(a[i], b[i], 1e-13));

    for (std::size_t p : {1u, 2u, 5u}) {
      const auto x = random_vector(gen, n * p, -3.0, 3.0);
      const auto beta = random_vector(gen, p, -1.0, 1.0);
      std::vector<double> o1(n), o2(n);
      ref.linear_predictor(x, beta, o1);
      vec.linear_predictor(x, beta, o2);
      for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-14));

      auto risk = random_vector(gen, n, 0.05, 4.0);
      auto w = random_vector(gen, n, 0.0, 1.0);
      for (double L : {0.0, 0.3, 5.0}) {
        std::vector<double> phi1(p), phi2(p);
        const auto m1 = ref.profile_moments(risk, w, x, L, phi1);
        const auto m2 = vec.profile_moments(risk, w, x, L, phi2);
        CHECK(testing::close_rel(m1.survival, m2.survival, 1e-13));
        CHECK(testing::close_rel(m1.gamma, m2.gamma, 1e-13));
        for (std::size_t d = 0; d < p; ++d) CHECK(testing::close_rel(phi1[d], phi2[d], 1e-12));
      }
    }
  }
}

TEST_CASE("scalar profile moments match a direct sum") {
  const std::vector<double> risk{0.5, 2.0}, w{0.25, 0.75}, x{1.0, -2.0};
  std::vector<double> phi(1);
  const auto m = simd::kernels(simd::Isa::Scalar).profile_moments(risk, w, x, 0.4, phi);
  const double s0 = std::exp(-0.2), s1 = std::exp(-0.8);
  CHECK(m.survival == doctest::Approx(0.25 * s0 + 0.75 * s1).epsilon(1e-15));
  CHECK(m.gamma == doctest::Approx(0.25 * 0.5 * s0 + 0.75 * 2.0 * s1).epsilon(1e-15));
  CHECK(phi[0] == doctest::Approx(0.25 * 0.5 * s0 - 2.0 * 0.75 * 2.0 * s1).epsilon(1e-15));
}

TEST_CASE("end-to-end estimates agree across instruction sets") {
  if (!simd::isa_available(simd::Isa::Avx2)) return;
  IsaGuard guard;
  const Dataset d = testing::random_dataset(77, 400);
  simd::set_isa(simd::Isa::Scalar);
  const CoxFit f1 = fit(d);
  const auto e1 = rmst_dly(f1, 2, testing::observed_atoms(d), 0.5, 10.0);
  const double v1 = rmst_variance(e1, f1).variance;
  simd::set_isa(simd::Isa::Avx2);
  const CoxFit f2 = fit(d);
  const auto e2 = rmst_dly(f2, 2, testing::observed_atoms(d), 0.5, 10.0);
  const double v2 = rmst_variance(e2, f2).variance;
  CHECK(f1.beta[0] == doctest::Approx(f2.beta[0]).epsilon(1e-12));
  CHECK(e1.value == doctest::Approx(e2.value).epsilon(1e-12));
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-10));
}

}
