#include "helpers.hpp"

#include <Eigen/Eigenvalues>

#include "rmstcea/error.hpp"
#include "rmstcea/rmst.hpp"

using namespace rmstcea;
using testing::rec;

namespace {

// Value of a window at perturbed coefficients with the Breslow baselines re-estimated.
double value_at(const Dataset& d, const CoxFit& base, const Vector& beta, const AtomTable& at, const Window& w) {
  CoxFit f = base;
  f.beta = beta;
  for (auto& [s, bh] : f.strata) bh = breslow(d, beta, s);
  return build_kernels(f, at, w).value;
}

}  // namespace

TEST_SUITE("asymptotics") {

TEST_CASE("two-event dataset: omega and psi against hand-expanded sums") {
  Dataset d;
  d.p = 1;
  d.eta = 3.0;
  d.records = {rec("a", 0, 1, true, 1, {0.0}), rec("b", 0, 2, true, 1, {1.0}), rec("c", 0, 3, false, 1, {0.5}),
               rec("e", 0, 2.5, true, 2, {0.3}), rec("f", 0, 3, false, 2, {0.9})};
  const CoxFit f = fit(d);
  const double b = f.beta[0];
  const AtomTable at = testing::observed_atoms(d);
  const KernelSet ks = build_kernels(f, at, {1, 0.0, 3.0, 0.0, std::nullopt});

  const double n = 3.0;  // stratum-1 records
  const double s0_1 = 1.0 + std::exp(b) + std::exp(0.5 * b), s0_2 = std::exp(b) + std::exp(0.5 * b);
  const double s1_1 = std::exp(b) + 0.5 * std::exp(0.5 * b), s1_2 = s1_1;
  const double lam[3] = {0.0, 1.0 / s0_1, 1.0 / s0_1 + 1.0 / s0_2};
  const double xs[5] = {0.0, 1.0, 0.5, 0.3, 0.9};
  double gam[3] = {0, 0, 0}, phi[3] = {0, 0, 0}, surv[3] = {0, 0, 0};
  for (int c = 0; c < 3; ++c) {
    for (double x : xs) {
      const double r = std::exp(b * x), s = std::exp(-r * lam[c]);
      surv[c] += s / 5.0;
      gam[c] += r * s / 5.0;
      phi[c] += x * r * s / 5.0;
    }
  }
  REQUIRE(ks.left.size() == 3);
  CHECK(ks.value == doctest::Approx(surv[0] + surv[1] + surv[2]).epsilon(1e-14));

  const double l1 = gam[1] + gam[2], l2 = gam[2], m = gam[0] + gam[1] + gam[2];
  const double omin = n / (s0_1 * s0_1) * l1 * l1 + n / (s0_2 * s0_2) * l2 * l2;
  const double omax = n / (s0_1 * s0_1) * (m * m - (m - l1) * (m - l1)) + n / (s0_2 * s0_2) * (m * m - (m - l2) * (m - l2));
  CHECK(omega(ks, Wedge::Min) == doctest::Approx(omin).epsilon(1e-12));
  CHECK(omega(ks, Wedge::Max) == doctest::Approx(omax).epsilon(1e-12));

  const double h[3] = {0.0, s1_1 / (s0_1 * s0_1), s1_1 / (s0_1 * s0_1) + s1_2 / (s0_2 * s0_2)};
  double want_psi = 0.0;
  for (int c = 0; c < 3; ++c) want_psi += gam[c] * h[c] - lam[c] * phi[c];
  CHECK(psi(ks)[0] == doctest::Approx(want_psi).epsilon(1e-12));

  const VarianceReport v = var_rmst_strt(ks, f);
  CHECK(v.martingale == doctest::Approx(omin / n).epsilon(1e-12));
  CHECK(v.beta == doctest::Approx(want_psi * want_psi / f.info(0, 0)).epsilon(1e-12));
}

TEST_CASE("omega closed form equals the double sum for both wedges, either loop order") {
  for (unsigned seed : {41u, 42u}) {
    const Dataset d = testing::random_dataset(seed, 120);
    const CoxFit f = fit(d);
    const AtomTable at = testing::observed_atoms(d);
    const Window windows[] = {{1, 0.0, 10.0, 0.0, std::nullopt},
                              {2, 0.5, 10.0, 0.5, std::nullopt},
                              {2, 0.7, 10.0, 0.7, 0.7},
                              {1, 1.0, 4.0, 0.0, std::nullopt}};
    for (const auto& w : windows) {
      const KernelSet ks = build_kernels(f, at, w);
      for (Wedge wedge : {Wedge::Min, Wedge::Max}) {
        const double closed = omega(ks, wedge);
        CHECK(omega_double_sum(ks, wedge, false) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(omega_double_sum(ks, wedge, true) == doctest::Approx(closed).epsilon(1e-12));
      }
      CHECK(omega(ks, Wedge::Max) >= omega(ks, Wedge::Min));
    }
  }
}

TEST_CASE("psi is the derivative of the estimate in beta") {
  const Dataset d = testing::random_dataset(43, 150);
  const CoxFit f = fit(d);
  const AtomTable at = testing::observed_atoms(d);
  const Window windows[] = {{1, 0.0, 10.0, 0.0, std::nullopt}, {2, 0.4, 10.0, 0.4, 0.4}, {2, 1.0, 10.0, 1.0, std::nullopt}};
  const double step = 1e-5;
  for (const auto& w : windows) {
    const Vector g = psi(build_kernels(f, at, w));
    for (int a = 0; a < 2; ++a) {
      Vector bp = f.beta, bm = f.beta;
      bp[a] += step;
      bm[a] -= step;
      const double fd = (value_at(d, f, bp, at, w) - value_at(d, f, bm, at, w)) / (2.0 * step);
      CHECK(testing::close_rel(g[a], fd, 1e-6));
    }
  }
}

TEST_CASE("variance decomposition and wedge ordering") {
  const Dataset d = testing::random_dataset(44, 200);
  const CoxFit f = fit(d);
  const AtomTable at = testing::observed_atoms(d);
  const auto e = rmst_dly(f, 2, at, 0.5, 10.0);
  const VarianceReport vmin = rmst_variance(e, f);
  VarianceOptions mx;
  mx.wedge = Wedge::Max;
  const VarianceReport vmax = rmst_variance(e, f, Component::Full, mx);
  CHECK(vmin.variance == doctest::Approx(vmin.martingale + vmin.beta).epsilon(1e-15));
  CHECK(vmin.variance == doctest::Approx(rmst_covariance(e, e, f)).epsilon(1e-13));
  CHECK(vmax.variance >= vmin.variance);
  CHECK(vmax.beta == doctest::Approx(vmin.beta).epsilon(1e-15));
}

TEST_CASE("segment helpers agree with the estimate-level API") {
  const Dataset d = testing::random_dataset(45, 200);
  const CoxFit f = fit(d);
  const AtomTable at = testing::observed_atoms(d);
  const double a = 0.6, eta = 10.0;
  const KernelSet head = build_kernels(f, at, {1, 0.0, a, 0.0, std::nullopt});
  const KernelSet tail = build_kernels(f, at, {2, a, eta, a, a});
  const auto e = rmst_dly(f, 2, at, a, eta);
  CHECK(var_rmst_dly(&head, tail, f).variance == doctest::Approx(rmst_variance(e, f).variance).epsilon(1e-13));

  const KernelSet s1 = build_kernels(f, at, {1, a, eta, a, std::nullopt});
  const KernelSet s2 = build_kernels(f, at, {2, a, eta, a, std::nullopt});
  const auto e1 = rmst_strt(f, 1, at, a, eta), e2 = rmst_strt(f, 2, at, a, eta);
  CHECK(cov_strt(s1, s2, f) == doctest::Approx(rmst_covariance(e1, e2, f)).epsilon(1e-13));
  CHECK(var_rmst_strt(s2, f).variance == doctest::Approx(rmst_variance(e2, f).variance).epsilon(1e-13));

  const double delays[] = {0.2, 0.5, 1.3};
  const double w[] = {0.2, 0.3, 0.5};
  std::vector<Linearization> lins;
  std::vector<DelayAtom> atoms;
  for (int l = 0; l < 3; ++l) {
    std::vector<KernelSet> segs;
    segs.push_back(build_kernels(f, at, {1, 0.0, delays[l], 0.0, std::nullopt}));
    segs.push_back(build_kernels(f, at, {2, delays[l], eta, delays[l], delays[l]}));
    lins.push_back(linearize(f, std::move(segs)));
    atoms.push_back({w[l], delays[l]});
  }
  const auto dst = rmst_dst(f, 2, at, DelaySpec::discrete(atoms), eta);
  CHECK(var_rmst_dst(lins, w, f).variance == doctest::Approx(rmst_variance(dst, f).variance).epsilon(1e-12));

  // Sum of weighted pairwise covariances.
  double pairwise = 0.0;
  for (int l = 0; l < 3; ++l)
    for (int h = 0; h < 3; ++h) pairwise += w[l] * w[h] * cov_dly_pair(lins[l], lins[h], f);
  CHECK(pairwise == doctest::Approx(rmst_variance(dst, f).variance).epsilon(1e-12));
  CHECK(cov_dly_pair(lins[0], lins[2], f) == doctest::Approx(cov_dly_pair(lins[2], lins[0], f)).epsilon(1e-14));
}

TEST_CASE("covariance matrices of several estimates are positive semidefinite") {
  for (unsigned seed : {46u, 47u, 48u}) {
    const Dataset d = testing::random_dataset(seed, 150);
    const CoxFit f = fit(d);
    const AtomTable at = testing::observed_atoms(d);
    std::vector<RmstEstimate> es{rmst_strt(f, 1, at, 0.5, 10.0), rmst_strt(f, 2, at, 0.5, 10.0),
                                 rmst_dly(f, 1, at, 0.5, 10.0), rmst_dly(f, 2, at, 0.5, 10.0),
                                 rmst_dly(f, 2, at, 2.0, 10.0)};
    Matrix c(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) c(i, j) = rmst_covariance(es[i], es[j], f);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("kernel preconditions") {
  const Dataset d = testing::random_dataset(49, 60);
  const CoxFit f = fit(d);
  const AtomTable at = testing::observed_atoms(d);
  CHECK_THROWS_AS(build_kernels(f, at, {1, 2.0, 1.0, 0.0, std::nullopt}), PreconditionError);
  CHECK_THROWS_AS(build_kernels(f, at, {1, 1.0, 2.0, 1.5, std::nullopt}), PreconditionError);
  CHECK_THROWS_AS(build_kernels(f, testing::fixed_atoms({1.0}), {1, 0.0, 2.0, 0.0, std::nullopt}), PreconditionError);
  CHECK_THROWS_AS(var_rmst_dst({}, {}, f), PreconditionError);
}

}
