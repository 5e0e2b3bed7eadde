#include "rmstcea/cea.hpp"

#include <cmath>
#include <cstdio>

#include "rmstcea/error.hpp"

namespace rmstcea {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void require_floor(double mu1, double muj, const IcerOptions& opts) {
  if (!(std::abs(muj - mu1) > opts.denom_floor)) {
    throw DegenerateDenominatorError("ICER denominator |" + num(muj) + " - " + num(mu1) + "| is below " +
                                         num(opts.denom_floor),
                                     mu1, muj);
  }
}

}  // namespace

double CostSpec::rate(int stratum) const {
  if (stratum < 1 || static_cast<std::size_t>(stratum) > rates.size()) {
    throw PreconditionError("no cost rate for group " + std::to_string(stratum));
  }
  return rates[static_cast<std::size_t>(stratum) - 1];
}

Interval normal_interval(double estimate, double se) {
  return {estimate, se, estimate - kZ975 * se, estimate + kZ975 * se};
}

double icer(double mu1, double muj, double c1, double cj, const IcerOptions& opts) {
  require_floor(mu1, muj, opts);
  return (cj * muj - c1 * mu1) / (muj - mu1);
}

std::array<double, 2> icer_gradient(double mu1, double muj, double c1, double cj) {
  const double d = muj - mu1;
  const double num_ = cj * muj - c1 * mu1;
  return {(-c1 * d + num_) / (d * d), (cj * d - num_) / (d * d)};
}

double icer_se(const TailPair& t, double c1, double cj, const IcerOptions& opts) {
  require_floor(t.mu1, t.muj, opts);
  const auto g = icer_gradient(t.mu1, t.muj, c1, cj);
  const double v = g[0] * g[0] * t.var1 + g[1] * g[1] * t.varj + 2.0 * g[0] * g[1] * t.cov;
  return std::sqrt(std::max(v, 0.0));
}

double inb(double mu1, double muj, double c1, double cj, double theta) {
  return (theta - cj) * muj - (theta - c1) * mu1;
}

double inb_se(const TailPair& t, double c1, double cj, double theta) {
  const double a1 = theta - c1;
  const double aj = theta - cj;
  const double v = a1 * a1 * t.var1 + aj * aj * t.varj - 2.0 * a1 * aj * t.cov;
  return std::sqrt(std::max(v, 0.0));
}

std::vector<InbPoint> inb_curve(const TailPair& tails, double c1, double cj, std::span<const double> thetas) {
  if (thetas.empty()) throw PreconditionError("willingness-to-pay grid is empty");
  if (!std::is_sorted(thetas.begin(), thetas.end())) throw PreconditionError("willingness-to-pay grid must be sorted");
  std::vector<InbPoint> out;
  out.reserve(thetas.size());
  for (double th : thetas) {
    out.push_back({th, normal_interval(inb(tails.mu1, tails.muj, c1, cj, th), inb_se(tails, c1, cj, th))});
  }
  return out;
}

TailPair tail_pair(const RmstEstimate& ref, const RmstEstimate& comp, const CoxFit& fit,
                   const VarianceOptions& opts) {
  TailPair t;
  t.mu1 = ref.value_tail;
  t.muj = comp.value_tail;
  t.var1 = rmst_variance(ref, fit, Component::Tail, opts).variance;
  t.varj = rmst_variance(comp, fit, Component::Tail, opts).variance;
  t.cov = rmst_covariance(ref, comp, fit, Component::Tail);
  return t;
}

CeReport cost_effectiveness(Scenario scenario, int stratum, const TailPair& tails, const CostSpec& costs,
                            const IcerOptions& opts) {
  CeReport rep;
  rep.scenario = scenario;
  rep.stratum = stratum;
  rep.tails = tails;
  rep.theta = costs.theta;
  rep.currency = costs.currency;
  const double c1 = costs.rate(1);
  const double cj = costs.rate(stratum);
  if (c1 < 0.0 || cj < 0.0 || costs.theta < 0.0) throw PreconditionError("costs and theta must be >= 0");
  try {
    rep.icer = normal_interval(icer(tails.mu1, tails.muj, c1, cj, opts), icer_se(tails, c1, cj, opts));
    rep.icer_defined = true;
  } catch (const DegenerateDenominatorError& e) {
    rep.warnings.push_back(std::string("DegenerateDenominator: ") + e.what());
  }
  rep.inb = normal_interval(inb(tails.mu1, tails.muj, c1, cj, costs.theta), inb_se(tails, c1, cj, costs.theta));
  return rep;
}

CeReport cost_effectiveness(const RmstEstimate& ref, const RmstEstimate& comp, const CoxFit& fit,
                            const CostSpec& costs, const IcerOptions& opts, const VarianceOptions& vopts) {
  if (ref.stratum != 1) throw PreconditionError("reference estimate must be for group 1");
  if (ref.scenario != comp.scenario) throw PreconditionError("estimates must share a scenario");
  CeReport rep = cost_effectiveness(comp.scenario, comp.stratum, tail_pair(ref, comp, fit, vopts), costs, opts);
  for (const auto* est : {&ref, &comp})
    for (const auto& w : est->warnings) rep.warnings.push_back(w);
  return rep;
}

}  // namespace rmstcea
