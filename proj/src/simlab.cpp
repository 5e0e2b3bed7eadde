#include "rmstcea/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "rmstcea/cox.hpp"
#include "rmstcea/error.hpp"

namespace rmstcea {

namespace {

constexpr const char* kEstimands[] = {"rmst1", "rmst2", "icer", "inb"};
constexpr std::size_t kNumEstimands = 4;

double draw_delay(const SimDesign& d, double u) {
  if (!d.delay_dist) return d.delay_lo + (d.delay_hi - d.delay_lo) * u;
  const DelaySpec& s = *d.delay_dist;
  switch (s.kind) {
    case DelayKind::None: return 0.0;
    case DelayKind::Fixed: return s.fixed_delay;
    case DelayKind::Empirical: {
      const auto k = std::min(s.observed.size() - 1, static_cast<std::size_t>(u * static_cast<double>(s.observed.size())));
      return s.observed[k];
    }
    case DelayKind::Discrete: {
      double acc = 0.0;
      for (const auto& a : s.atoms) {
        acc += a.probability;
        if (u < acc) return a.delay;
      }
      return s.atoms.back().delay;
    }
    case DelayKind::MixtureExp: {
      if (u < s.zero_mass) return 0.0;
      const double v = (u - s.zero_mass) / (1.0 - s.zero_mass);
      return -std::log1p(-v) / s.rate;
    }
  }
  return 0.0;
}

// Time at which the cumulative hazard lambda * r * t^k reaches e.
double invert(double e, double lambda, double r, double k) { return std::pow(e / (lambda * r), 1.0 / k); }

struct ReplicateOutcome {
  // [scenario][estimand]
  std::vector<std::array<double, kNumEstimands>> estimate, se;
  std::vector<std::array<char, kNumEstimands>> ok;
  std::size_t group1 = 0, group2 = 0, censored1 = 0, censored2 = 0, died_during_delay = 0;
  std::size_t failures = 0;
  std::vector<std::string> errors;
};

ReplicateOutcome run_replicate(const SimDesign& design, const std::vector<StudyScenario>& scenarios,
                               std::uint64_t replicate, const VarianceOptions& vopts) {
  ReplicateOutcome out;
  const std::size_t ns = scenarios.size();
  out.estimate.assign(ns, {});
  out.se.assign(ns, {});
  out.ok.assign(ns, {0, 0, 0, 0});

  const SimDataset sim = generate_dataset(design, replicate);
  out.group1 = sim.group1;
  out.group2 = sim.group2;
  out.censored1 = sim.censored1;
  out.censored2 = sim.censored2;
  out.died_during_delay = sim.died_during_delay;

  CoxFit fitted;
  AtomTable atoms;
  try {
    fitted = fit(sim.data);
    const auto resolved = resolve_profile(CovariateProfile::observed(), sim.data);
    atoms = compress_atoms(resolved, sim.data.p);
  } catch (const Error& e) {
    out.failures = ns;
    out.errors.emplace_back(e.what());
    return out;
  }

  for (std::size_t s = 0; s < ns; ++s) {
    const StudyScenario& sc = scenarios[s];
    try {
      RmstEstimate e1, e2;
      switch (sc.scenario) {
        case Scenario::Strt:
          e1 = rmst_strt(fitted, 1, atoms, sc.time, design.eta);
          e2 = rmst_strt(fitted, 2, atoms, sc.time, design.eta);
          break;
        case Scenario::Dly:
          e1 = rmst_dly(fitted, 1, atoms, sc.time, design.eta);
          e2 = rmst_dly(fitted, 2, atoms, sc.time, design.eta);
          break;
        case Scenario::Dst:
          e1 = rmst_dst(fitted, 1, atoms, sc.delays, design.eta);
          e2 = rmst_dst(fitted, 2, atoms, sc.delays, design.eta);
          break;
      }
      auto& est = out.estimate[s];
      auto& se = out.se[s];
      auto& ok = out.ok[s];
      est[0] = e1.value;
      se[0] = std::sqrt(rmst_variance(e1, fitted, Component::Full, vopts).variance);
      est[1] = e2.value;
      se[1] = std::sqrt(rmst_variance(e2, fitted, Component::Full, vopts).variance);
      ok[0] = ok[1] = 1;
      const TailPair tails = tail_pair(e1, e2, fitted, vopts);
      const CeReport ce = cost_effectiveness(sc.scenario, 2, tails, design.costs);
      if (ce.icer_defined) {
        est[2] = ce.icer.estimate;
        se[2] = ce.icer.se;
        ok[2] = 1;
      }
      est[3] = ce.inb.estimate;
      se[3] = ce.inb.se;
      ok[3] = 1;
    } catch (const Error& e) {
      ++out.failures;
      out.errors.emplace_back(e.what());
    }
  }
  return out;
}

}  // namespace

void SimDesign::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError(std::string(what) + " must be positive");
  };
  if (n < 2) throw PreconditionError("sample size must be at least 2");
  positive(lambda01, "lambda01");
  positive(lambda02, "lambda02");
  positive(censor_rate, "censor_rate");
  positive(eta, "eta");
  positive(weibull_shape, "weibull_shape");
  if (!std::isfinite(beta)) throw PreconditionError("beta must be finite");
  if (!(covariate_p >= 0.0 && covariate_p <= 1.0)) throw PreconditionError("covariate_p must lie in [0, 1]");
  if (!(delay_fraction >= 0.0 && delay_fraction <= 1.0)) throw PreconditionError("delay_fraction must lie in [0, 1]");
  if (!(delay_lo >= 0.0 && delay_hi >= delay_lo)) throw PreconditionError("uniform delay bounds are invalid");
  if (replicates < 1) throw PreconditionError("replicates must be >= 1");
  if (delay_dist) (void)delay_atoms(*delay_dist, eta);
  if (costs.rates.size() < 2) throw PreconditionError("costs are required for both groups");
}

SimDataset generate_dataset(const SimDesign& design, std::uint64_t replicate) {
  design.validate();
  Philox4x64 rng(design.seed, replicate);
  SimDataset out;
  out.data.p = 1;
  out.data.eta = design.eta;
  out.group1 = design.n / 2;
  out.group2 = design.n - out.group1;
  const auto n_delayed = static_cast<std::size_t>(std::llround(design.delay_fraction * static_cast<double>(out.group2)));
  const double k = design.weibull_shape;
  out.data.records.reserve(design.n + n_delayed);

  for (std::size_t i = 0; i < design.n; ++i) {
    // One Philox block per subject keeps streams aligned across designs.
    const double u_x = rng.uniform();
    const double e = rng.exponential(1.0);
    const double cens = rng.exponential(design.censor_rate);
    const double u_d = rng.uniform();

    const double x = u_x < design.covariate_p ? 1.0 : 0.0;
    const double r = std::exp(design.beta * x);
    const bool group1 = i < out.group1;
    const bool delayed = !group1 && (i - out.group1) < n_delayed;
    const double delay = delayed ? draw_delay(design, u_d) : 0.0;

    double t;
    if (group1) {
      t = invert(e, design.lambda01, r, k);
    } else {
      const double h_delay = design.lambda01 * r * std::pow(delay, k);
      if (e < h_delay) {
        t = invert(e, design.lambda01, r, k);
      } else {
        t = std::pow((e - h_delay) / (design.lambda02 * r) + std::pow(delay, k), 1.0 / k);
      }
    }
    const double end = std::min({t, cens, design.eta});
    const bool died = t <= cens && t <= design.eta;

    RawSubject raw;
    raw.subject_id = "s" + std::to_string(i + 1);
    raw.followup_end = end;
    raw.died = died;
    raw.covariates = {x};
    if (!group1) {
      if (delay < end) {
        raw.switch_time = delay;
      } else if (died) {
        ++out.died_during_delay;
      }
    }
    if (group1) {
      out.censored1 += died ? 0 : 1;
    } else {
      out.censored2 += died ? 0 : 1;
    }
    for (auto& rec : split_switcher_history(raw)) out.data.records.push_back(std::move(rec));
  }
  return out;
}

StudyScenario StudyScenario::no_delay() { return {"no-delay", Scenario::Dly, 0.0, DelaySpec::none()}; }

StudyScenario StudyScenario::strt(double r) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "strt(r=%g)", r);
  return {buf, Scenario::Strt, r, DelaySpec::none()};
}

StudyScenario StudyScenario::dly(double a) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "dly(a=%g)", a);
  return {buf, Scenario::Dly, a, DelaySpec::none()};
}

StudyScenario StudyScenario::dst(DelaySpec delays, std::string label) {
  return {std::move(label), Scenario::Dst, 0.0, std::move(delays)};
}

double limiting_icer(double lambda01, double lambda02, double c1, double c2) {
  if (lambda01 == lambda02) throw NoClosedFormError("limiting ICER is undefined for equal hazards");
  return (c2 * lambda01 - c1 * lambda02) / (lambda01 - lambda02);
}

TheoreticalValues theoretical_values(const SimDesign& design, const StudyScenario& scenario) {
  if (design.weibull_shape != 1.0) throw NoClosedFormError("closed forms need constant baseline hazards");
  const double l1 = design.lambda01;
  const double l2 = design.lambda02;
  const double eta = design.eta;
  const double px[2] = {1.0 - design.covariate_p, design.covariate_p};
  const double rx[2] = {1.0, std::exp(design.beta)};

  // Integral of exp(-h (t - from)) over [lo, eta).
  auto area = [eta](double h, double from, double lo) {
    return std::exp(-h * (lo - from)) * (-std::expm1(-h * (eta - lo))) / h;
  };

  TheoreticalValues tv;
  auto add_dly = [&](double a, double w) {
    for (int k = 0; k < 2; ++k) {
      const double h1 = l1 * rx[k];
      const double h2 = l2 * rx[k];
      const double head = -std::expm1(-h1 * a) / h1;
      const double tail2 = std::exp(-h1 * a) * area(h2, a, a);
      tv.mu1 += w * px[k] * area(h1, 0.0, 0.0);
      tv.mu1_tail += w * px[k] * area(h1, 0.0, a);
      tv.mu2 += w * px[k] * (head + tail2);
      tv.mu2_tail += w * px[k] * tail2;
    }
  };

  switch (scenario.scenario) {
    case Scenario::Strt: {
      const double r = scenario.time;
      if (!(r >= 0.0 && r < eta)) throw PreconditionError("r must lie in [0, eta)");
      for (int k = 0; k < 2; ++k) {
        tv.mu1 += px[k] * area(l1 * rx[k], r, r);
        tv.mu2 += px[k] * area(l2 * rx[k], r, r);
      }
      tv.mu1_tail = tv.mu1;
      tv.mu2_tail = tv.mu2;
      break;
    }
    case Scenario::Dly:
      if (!(scenario.time >= 0.0 && scenario.time < eta)) throw PreconditionError("a must lie in [0, eta)");
      add_dly(scenario.time, 1.0);
      break;
    case Scenario::Dst: {
      if (scenario.delays.kind == DelayKind::Empirical || scenario.delays.kind == DelayKind::MixtureExp) {
        throw NoClosedFormError("closed forms need a finite delay distribution");
      }
      for (const auto& atom : delay_atoms(scenario.delays, eta).atoms) add_dly(atom.delay, atom.probability);
      break;
    }
  }
  const double c1 = design.costs.rate(1);
  const double c2 = design.costs.rate(2);
  tv.icer = (c2 * tv.mu2_tail - c1 * tv.mu1_tail) / (tv.mu2_tail - tv.mu1_tail);
  tv.inb = inb(tv.mu1_tail, tv.mu2_tail, c1, c2, design.costs.theta);
  tv.icer_limit = l1 == l2 ? std::numeric_limits<double>::quiet_NaN() : limiting_icer(l1, l2, c1, c2);
  return tv;
}

std::size_t default_threads() {
  if (const char* env = std::getenv("RMSTCEA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

StudyResult run_study(const SimDesign& design, const std::vector<StudyScenario>& scenarios,
                      const StudyOptions& opts) {
  design.validate();
  if (scenarios.empty()) throw PreconditionError("no scenarios requested");
  const std::size_t reps = design.replicates;
  const std::size_t threads = std::min(reps, opts.threads > 0 ? opts.threads : default_threads());

  std::vector<ReplicateOutcome> outcomes(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reps; i = next++) {
      outcomes[i] = run_replicate(design, scenarios, i, opts.variance);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  StudyResult res;
  res.design = design;
  res.threads = threads;
  std::size_t g1 = 0, g2 = 0, c1 = 0, c2 = 0, dd = 0, failures = 0;
  for (const auto& o : outcomes) {
    g1 += o.group1;
    g2 += o.group2;
    c1 += o.censored1;
    c2 += o.censored2;
    dd += o.died_during_delay;
    failures += o.failures;
  }
  res.diagnostics.censoring1 = static_cast<double>(c1) / static_cast<double>(g1);
  res.diagnostics.censoring2 = static_cast<double>(c2) / static_cast<double>(g2);
  res.diagnostics.missing_treatment = static_cast<double>(dd) / static_cast<double>(g2);
  res.diagnostics.failure_rate = static_cast<double>(failures) / static_cast<double>(reps * scenarios.size());
  if (res.diagnostics.failure_rate > 0.02) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "replicate failure rate %.3g exceeds 2%%", res.diagnostics.failure_rate);
    res.warnings.emplace_back(buf);
  }

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    std::optional<TheoreticalValues> tv;
    try {
      tv = theoretical_values(design, scenarios[s]);
    } catch (const NoClosedFormError& e) {
      res.warnings.push_back(scenarios[s].label + ": " + e.what() + "; bias and coverage not reported");
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double truths[kNumEstimands] = {tv ? tv->mu1 : nan, tv ? tv->mu2 : nan, tv ? tv->icer : nan,
                                          tv ? tv->inb : nan};
    for (std::size_t q = 0; q < kNumEstimands; ++q) {
      StudyRow row;
      row.scenario = scenarios[s].label;
      row.estimand = kEstimands[q];
      row.truth = truths[q];
      double sum = 0.0, sum_se = 0.0, covered = 0.0;
      for (const auto& o : outcomes) {
        if (o.ok.empty() || !o.ok[s][q]) {
          ++row.failed;
          continue;
        }
        ++row.used;
        const double est = o.estimate[s][q];
        const double se = o.se[s][q];
        sum += est;
        sum_se += se;
        if (std::abs(est - row.truth) <= kZ975 * se) covered += 1.0;
      }
      if (row.used > 0) {
        const double m = static_cast<double>(row.used);
        row.mean = sum / m;
        row.mean_se = sum_se / m;
        double ss = 0.0;
        for (const auto& o : outcomes) {
          if (o.ok.empty() || !o.ok[s][q]) continue;
          const double dlt = o.estimate[s][q] - row.mean;
          ss += dlt * dlt;
        }
        row.sd = row.used > 1 ? std::sqrt(ss / (m - 1.0)) : nan;
        row.rel_bias_pct = 100.0 * (row.mean - row.truth) / row.truth;
        row.se_rel_bias_pct = 100.0 * (row.mean_se / row.sd - 1.0);
        row.coverage = tv ? covered / m : nan;
      }
      res.rows.push_back(row);
    }
  }
  return res;
}

}  // namespace rmstcea
