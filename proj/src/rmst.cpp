#include "rmstcea/rmst.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rmstcea/error.hpp"

namespace rmstcea {

namespace {

constexpr std::size_t kKeepKernelsUpTo = 64;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Throws when exp(-exp(b'x) L_s(t)) underflows to zero for a profile atom with positive weight.
void require_conditioning(const CoxFit& fit, int stratum, const AtomTable& atoms, double t) {
  const double lam = fit.baseline(stratum).cumhaz(t);
  if (lam <= 0.0) return;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (atoms.weight[k] <= 0.0) continue;
    const std::vector<double> x = atoms.atom(k);
    if (std::exp(-fit.relative_risk(x) * lam) == 0.0) {
      throw DegenerateConditioningError("survival to " + num(t) + " in stratum " + std::to_string(stratum) +
                                        " is zero for a profile atom");
    }
  }
}

void note_empty(const KernelSet& ks, std::vector<std::string>& warnings) {
  if (!ks.empty_grid) return;
  warnings.push_back("EmptyGrid: no stratum-" + std::to_string(ks.window.stratum) + " events in (" +
                     num(ks.window.condition) + ", " + num(ks.window.upper) +
                     "); martingale variance term is 0");
}

void append_grid(const KernelSet& ks, std::vector<double>& grid) {
  grid.insert(grid.end(), ks.left.begin(), ks.left.end());
}

void finish_grid(std::vector<double>& grid, double eta) {
  grid.push_back(eta);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

struct DlyParts {
  double value = 0.0;
  double tail_value = 0.0;
  Linearization full;
  Linearization tail;
  std::vector<std::string> warnings;
  std::vector<double> grid;
};

DlyParts dly_parts(const CoxFit& fit, int stratum, const AtomTable& profile, double a, double eta) {
  if (!(a >= 0.0 && a < eta)) throw PreconditionError("delay a must satisfy 0 <= a < eta");
  DlyParts out;
  if (stratum == 1) {
    KernelSet whole = build_kernels(fit, profile, {1, 0.0, eta, 0.0, std::nullopt});
    KernelSet after = build_kernels(fit, profile, {1, a, eta, 0.0, std::nullopt});
    note_empty(whole, out.warnings);
    append_grid(whole, out.grid);
    out.value = whole.value;
    out.tail_value = after.value;
    out.full = linearize(fit, {std::move(whole)});
    out.tail = linearize(fit, {std::move(after)});
    return out;
  }
  require_conditioning(fit, stratum, profile, a);
  const BaselineHazard& bj = fit.baseline(stratum);
  if (a < bj.min_entry) {
    out.warnings.push_back("delay " + num(a) + " is below the earliest stratum-" + std::to_string(stratum) +
                           " entry " + num(bj.min_entry) + "; conditional hazard is extrapolated");
  }
  KernelSet tail = build_kernels(fit, profile, {stratum, a, eta, a, a});
  note_empty(tail, out.warnings);
  out.tail_value = tail.value;
  out.value = tail.value;
  std::vector<KernelSet> segs;
  if (a > 0.0) {
    KernelSet head = build_kernels(fit, profile, {1, 0.0, a, 0.0, std::nullopt});
    out.value += head.value;
    append_grid(head, out.grid);
    segs.push_back(std::move(head));
  }
  append_grid(tail, out.grid);
  out.tail = linearize(fit, {tail});
  segs.push_back(std::move(tail));
  out.full = linearize(fit, std::move(segs));
  return out;
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Strt: return "strt";
    case Scenario::Dly: return "dly";
    case Scenario::Dst: return "dst";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "strt") return Scenario::Strt;
  if (s == "dly") return Scenario::Dly;
  if (s == "dst") return Scenario::Dst;
  throw PreconditionError("unknown scenario '" + name + "' (expected strt, dly or dst)");
}

RmstEstimate rmst_strt(const CoxFit& fit, int stratum, const AtomTable& profile, double r, double eta) {
  if (!(r >= 0.0 && r < eta)) throw PreconditionError("truncation time r must satisfy 0 <= r < eta");
  const double delta = fit.max_min_entry();
  if (!(r > delta || (r == 0.0 && delta == 0.0))) {
    throw PreconditionError("truncation time r = " + num(r) + " must exceed the max-of-min entry " + num(delta));
  }
  require_conditioning(fit, stratum, profile, r);
  RmstEstimate est;
  est.scenario = Scenario::Strt;
  est.stratum = stratum;
  est.lower = r;
  est.eta = eta;
  est.profile = profile;
  KernelSet ks = build_kernels(fit, profile, {stratum, r, eta, r, std::nullopt});
  note_empty(ks, est.warnings);
  append_grid(ks, est.grid);
  finish_grid(est.grid, eta);
  est.value = ks.value;
  est.value_tail = ks.value;
  auto cache = std::make_shared<RmstKernels>();
  cache->full = linearize(fit, {std::move(ks)});
  cache->tail = cache->full;
  est.kernel_cache = std::move(cache);
  return est;
}

RmstEstimate rmst_dly(const CoxFit& fit, int stratum, const AtomTable& profile, double a, double eta) {
  DlyParts parts = dly_parts(fit, stratum, profile, a, eta);
  RmstEstimate est;
  est.scenario = Scenario::Dly;
  est.stratum = stratum;
  est.lower = a;
  est.eta = eta;
  est.profile = profile;
  est.value = parts.value;
  est.value_tail = parts.tail_value;
  est.grid = std::move(parts.grid);
  finish_grid(est.grid, eta);
  est.warnings = std::move(parts.warnings);
  auto cache = std::make_shared<RmstKernels>();
  cache->full = std::move(parts.full);
  cache->tail = std::move(parts.tail);
  est.kernel_cache = std::move(cache);
  return est;
}

RmstEstimate rmst_dst(const CoxFit& fit, int stratum, const AtomTable& profile, const DelaySpec& delays,
                      double eta) {
  RmstEstimate est;
  est.scenario = Scenario::Dst;
  est.stratum = stratum;
  est.lower = 0.0;
  est.eta = eta;
  est.profile = profile;
  est.delays = delay_atoms(delays, eta);
  if (est.delays.atoms.empty()) throw PreconditionError("delay distribution has no atoms");

  // DLY depends on the delay value only, so repeated delays are evaluated once.
  std::map<double, double> merged;
  double total = 0.0;
  for (const auto& d : est.delays.atoms) {
    merged[d.delay] += d.probability;
    total += d.probability;
  }
  if (!(total > 0.0)) throw PreconditionError("delay probabilities sum to zero");
  const bool keep = merged.size() <= kKeepKernelsUpTo;

  auto cache = std::make_shared<RmstKernels>();
  cache->full.influence.psi = Vector::Zero(static_cast<Eigen::Index>(fit.p));
  cache->tail.influence.psi = Vector::Zero(static_cast<Eigen::Index>(fit.p));
  cache->variance_supported = !delays.is_continuous();
  for (const auto& [delay, prob] : merged) {
    const double w = prob / total;
    DlyParts parts = dly_parts(fit, stratum, profile, delay, eta);
    est.value += w * parts.value;
    est.value_tail += w * parts.tail_value;
    cache->full.add(parts.full, w, keep);
    cache->tail.add(parts.tail, w, keep);
    est.grid.insert(est.grid.end(), parts.grid.begin(), parts.grid.end());
    for (auto& msg : parts.warnings) {
      if (std::find(est.warnings.begin(), est.warnings.end(), msg) == est.warnings.end()) est.warnings.push_back(msg);
    }
  }
  finish_grid(est.grid, eta);
  if (est.delays.truncated_mass > 0.0) {
    est.warnings.push_back("delay mass " + num(est.delays.truncated_mass) +
                           " beyond eta dropped and the remainder renormalized");
  }
  est.kernel_cache = std::move(cache);
  return est;
}

namespace {

const Linearization& pick(const RmstEstimate& est, Component which) {
  if (!est.kernel_cache) throw PreconditionError("estimate carries no kernels");
  if (!est.kernel_cache->variance_supported) {
    throw UnsupportedError("variance is not available for continuous delay distributions");
  }
  return which == Component::Full ? est.kernel_cache->full : est.kernel_cache->tail;
}

}  // namespace

VarianceReport rmst_variance(const RmstEstimate& est, const CoxFit& fit, Component which,
                             const VarianceOptions& opts) {
  return variance(pick(est, which), fit, opts);
}

double rmst_covariance(const RmstEstimate& a, const RmstEstimate& b, const CoxFit& fit, Component which) {
  return covariance(pick(a, which), pick(b, which), fit);
}

}  // namespace rmstcea
