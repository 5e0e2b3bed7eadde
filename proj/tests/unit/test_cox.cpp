#include "helpers.hpp"

#include <map>
#include <set>

#include "rmstcea/error.hpp"

using namespace rmstcea;
using testing::rec;

namespace {

// Direct O(n^2) Breslow-ties log partial likelihood.
double naive_loglik(const Dataset& d, const Vector& beta) {
  auto lp = [&](const SubjectRecord& r) {
    double s = 0.0;
    for (std::size_t k = 0; k < d.p; ++k) s += beta[static_cast<Eigen::Index>(k)] * r.covariates[k];
    return s;
  };
  std::set<std::pair<int, double>> times;
  for (const auto& r : d.records)
    if (r.event) times.insert({r.stratum, r.exit});
  double ll = 0.0;
  for (const auto& [s, t] : times) {
    double denom = 0.0, dead = 0.0, num = 0.0;
    for (const auto& r : d.records) {
      if (r.stratum != s) continue;
      if (r.entry < t && t <= r.exit) denom += std::exp(lp(r));
      if (r.event && r.exit == t) {
        dead += 1.0;
        num += lp(r);
      }
    }
    ll += num - dead * std::log(denom);
  }
  return ll;
}

double grid_search_1d(const Dataset& d) {
  double lo = -6.0, hi = 6.0, best = 0.0;
  for (int level = 0; level < 7; ++level) {
    const double step = (hi - lo) / 200.0;
    double best_ll = -HUGE_VAL;
    for (int k = 0; k <= 200; ++k) {
      const double b = lo + k * step;
      Vector v(1);
      v << b;
      const double ll = naive_loglik(d, v);
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
    lo = best - 2.0 * step;
    hi = best + 2.0 * step;
  }
  return best;
}

Dataset eight_subjects(unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  d.p = 1;
  d.eta = 5.0;
  for (int i = 0; i < 8; ++i) {
    const double entry = i % 3 == 0 ? 0.2 * u(gen) : 0.0;
    const double exit = entry + 0.1 + std::floor(20.0 * u(gen)) / 10.0;  // coarse grid creates ties
    d.records.push_back(rec("i" + std::to_string(i), entry, exit, i % 4 != 3, 1 + i % 2, {u(gen) * 2.0}));
  }
  return d;
}

}  // namespace

TEST_SUITE("cox") {

TEST_CASE("Breslow equals Nelson-Aalen at beta = 0 with ties and delayed entry") {
  Dataset d;
  d.p = 1;
  d.eta = 5.0;
  d.records = {rec("a", 0.0, 1.0, true, 1, {0.3}),  rec("b", 0.0, 1.0, true, 1, {1.2}),
               rec("c", 0.5, 2.0, true, 1, {0.0}),  rec("d", 1.5, 3.0, false, 1, {2.0}),
               rec("e", 0.0, 2.5, true, 1, {0.7}),  rec("f", 1.0, 3.0, true, 1, {0.1}),
               rec("g", 0.0, 0.4, false, 1, {0.2})};
  const BaselineHazard bh = breslow(d, Vector::Zero(1), 1);
  // t=1: at risk a,b,c,e (g left at 0.4; f enters at 1.0 so not at risk) -> 2/4.
  // t=2: c,d,e,f -> 1/4.  t=2.5: d,e,f -> 1/3.  t=3: d,f -> 1/2.
  REQUIRE(bh.event_times == std::vector<double>{1.0, 2.0, 2.5, 3.0});
  CHECK(bh.at_risk == std::vector<double>{4, 4, 3, 2});
  CHECK(bh.events == std::vector<double>{2, 1, 1, 1});
  CHECK(bh.jumps[0] == 0.5);
  CHECK(bh.jumps[1] == 0.25);
  CHECK(bh.jumps[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(bh.jumps[3] == 0.5);
  CHECK(bh.cumhaz(2.7) == doctest::Approx(0.5 + 0.25 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(bh.cumhaz(0.99) == 0.0);
}

TEST_CASE("Breslow at fitted beta matches a direct risk-set oracle") {
  const Dataset d = testing::random_dataset(11, 60);
  const CoxFit f = fit(d);
  for (const auto& [s, bh] : f.strata) {
    for (std::size_t k = 0; k < bh.size(); ++k) {
      const double t = bh.event_times[k];
      double s0 = 0.0, dead = 0.0;
      for (const auto& r : d.records) {
        if (r.stratum != s) continue;
        if (r.entry < t && t <= r.exit) s0 += f.relative_risk(r.covariates);
        if (r.event && r.exit == t) dead += 1.0;
      }
      CHECK(bh.risk_sum[k] == doctest::Approx(s0).epsilon(1e-12));
      CHECK(bh.jumps[k] == doctest::Approx(dead / s0).epsilon(1e-12));
    }
  }
}

TEST_CASE("log partial likelihood agrees with the naive oracle") {
  const Dataset d = testing::random_dataset(12, 50);
  std::mt19937 gen(1);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 10; ++rep) {
    Vector b(2);
    b << z(gen), z(gen);
    CHECK(partial_likelihood(d, b).loglik == doctest::Approx(naive_loglik(d, b)).epsilon(1e-11));
  }
}

TEST_CASE("Newton fit matches the grid-search oracle on small datasets") {
  for (unsigned seed = 1; seed <= 12; ++seed) {
    const Dataset d = eight_subjects(seed);
    CoxFit f;
    try {
      f = fit(d);
    } catch (const Error&) {
      continue;  // monotone likelihood; the oracle has no interior optimum either
    }
    const double oracle = grid_search_1d(d);
    if (std::abs(oracle) > 5.9) continue;
    CAPTURE(seed);
    CHECK(std::abs(f.beta[0] - oracle) < 1e-4);
  }
}

TEST_CASE("score and information match central differences") {
  const Dataset d = testing::random_dataset(13, 80, 3);
  std::mt19937 gen(2);
  std::normal_distribution<double> z(0.0, 0.5);
  const double h = 1e-5;
  for (int rep = 0; rep < 5; ++rep) {
    Vector b(3);
    b << z(gen), z(gen), z(gen);
    const PartialLikelihood pl = partial_likelihood(d, b);
    for (int a = 0; a < 3; ++a) {
      Vector bp = b, bm = b;
      bp[a] += h;
      bm[a] -= h;
      const PartialLikelihood pp = partial_likelihood(d, bp), pm = partial_likelihood(d, bm);
      const double fd_score = (pp.loglik - pm.loglik) / (2.0 * h);
      CHECK(testing::close_rel(pl.score[a], fd_score, 1e-5));
      for (int c = 0; c < 3; ++c) {
        const double fd_info = -(pp.score[c] - pm.score[c]) / (2.0 * h);
        CHECK(testing::close_rel(pl.info(a, c), fd_info, 1e-5));
      }
    }
  }
}

TEST_CASE("fit reaches a stationary point with monotone likelihood trace") {
  const Dataset d = testing::random_dataset(14, 300);
  const CoxFit f = fit(d);
  CHECK(f.converged);
  CHECK(f.max_score < CoxConfig{}.tol_score);
  for (std::size_t k = 1; k < f.loglik_trace.size(); ++k) CHECK(f.loglik_trace[k] >= f.loglik_trace[k - 1] - 1e-9);
  CHECK(f.loglik >= f.loglik_null);
  CHECK(f.n_total == 300);
  CHECK(f.info_inverse.rows() == 2);
  CHECK((f.info * f.info_inverse - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("covariate shift leaves beta and predicted survival unchanged") {
  Dataset d = testing::random_dataset(15, 120);
  const CoxFit f = fit(d);
  Dataset shifted = d;
  for (auto& r : shifted.records) {
    r.covariates[0] += 3.0;
    r.covariates[1] -= 1.5;
  }
  const CoxFit g = fit(shifted);
  CHECK(g.beta[0] == doctest::Approx(f.beta[0]).epsilon(1e-9));
  CHECK(g.beta[1] == doctest::Approx(f.beta[1]).epsilon(1e-9));
  const double factor = std::exp(-(f.beta[0] * 3.0 - f.beta[1] * 1.5));
  for (int s : {1, 2})
    for (double t : {1.0, 5.0}) CHECK(g.baseline(s).cumhaz(t) == doctest::Approx(factor * f.baseline(s).cumhaz(t)).epsilon(1e-9));
  const std::vector<double> x{0.4, 1.1}, xs{3.4, -0.4};
  for (double t : {0.5, 1.0, 3.0, 7.0}) {
    CHECK(survival(g, 2, xs, t) == doctest::Approx(survival(f, 2, x, t)).epsilon(1e-10));
  }
}

TEST_CASE("survival identities") {
  const Dataset d = testing::random_dataset(16, 150);
  const CoxFit f = fit(d);
  const std::vector<double> x{1.0, 0.0};
  CHECK(survival(f, 1, x, 0.0) == 1.0);
  for (double a : {0.2, 1.0}) {
    for (double t : {1.5, 4.0}) {
      CHECK(survival(f, 1, x, t, a) == doctest::Approx(survival(f, 1, x, t) / survival(f, 1, x, a)).epsilon(1e-12));
    }
  }
  double prev = 1.0;
  for (double t = 0.0; t < 10.0; t += 0.25) {
    const double s = survival(f, 2, x, t);
    CHECK(s <= prev);
    prev = s;
  }
  CHECK_THROWS_AS(survival(f, 1, x, 0.5, 1.0), PreconditionError);
}

TEST_CASE("error paths") {
  Dataset constant;
  constant.p = 1;
  constant.eta = 5.0;
  constant.records = {rec("a", 0, 1, true, 1, {1.0}), rec("b", 0, 2, true, 1, {1.0}), rec("c", 0, 3, false, 1, {1.0})};
  CHECK_THROWS_AS(fit(constant), SingularInformationError);
  CoxConfig ridge;
  ridge.ridge = 0.1;
  CHECK(fit(constant, ridge).beta[0] == doctest::Approx(0.0));

  Dataset none = constant;
  for (auto& r : none.records) r.event = false;
  CHECK_THROWS_AS(fit(none), PreconditionError);

  // Perfect separation: larger x always dies first, so the likelihood is monotone.
  Dataset sep;
  sep.p = 1;
  sep.eta = 5.0;
  for (int i = 0; i < 6; ++i) sep.records.push_back(rec("s" + std::to_string(i), 0, 1.0 + i, true, 1, {6.0 - i}));
  CoxConfig few;
  few.max_iter = 4;
  CHECK_THROWS_AS(fit(sep, few), DivergedError);

  Dataset bad = constant;
  bad.records[0].exit = -1.0;
  CHECK_THROWS_AS(fit(bad), PreconditionError);
}

TEST_CASE("no covariates gives the Nelson-Aalen fit") {
  Dataset d;
  d.p = 0;
  d.eta = 4.0;
  d.records = {rec("a", 0, 1, true, 1, {}), rec("b", 0, 2, true, 1, {}), rec("c", 0, 3, false, 1, {})};
  const CoxFit f = fit(d);
  CHECK(f.converged);
  CHECK(f.baseline(1).cumhaz(2.0) == doctest::Approx(1.0 / 3.0 + 0.5));
}

}
