#pragma once

#include <array>
#include <string>
#include <vector>

#include "rmstcea/cox.hpp"
#include "rmstcea/rmst.hpp"

namespace rmstcea {

inline constexpr double kZ975 = 1.959964;

struct CostSpec {
  std::vector<double> rates;  // cost per person-year, indexed by stratum - 1
  double theta = 0.0;         // willingness to pay per life-year
  std::string currency = "USD";

  double rate(int stratum) const;
};

/// Tail RMSTs of the reference group (1) and comparator j with their 2x2 covariance.
struct TailPair {
  double mu1 = 0.0;
  double muj = 0.0;
  double var1 = 0.0;
  double varj = 0.0;
  double cov = 0.0;
};

struct Interval {
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

Interval normal_interval(double estimate, double se);

struct IcerOptions {
  double denom_floor = 1e-9;
};

double icer(double mu1, double muj, double c1, double cj, const IcerOptions& opts = {});
/// (df/dmu1, df/dmuj).
std::array<double, 2> icer_gradient(double mu1, double muj, double c1, double cj);
double icer_se(const TailPair& tails, double c1, double cj, const IcerOptions& opts = {});

double inb(double mu1, double muj, double c1, double cj, double theta);
double inb_se(const TailPair& tails, double c1, double cj, double theta);

struct InbPoint {
  double theta = 0.0;
  Interval inb;
};

std::vector<InbPoint> inb_curve(const TailPair& tails, double c1, double cj, std::span<const double> thetas);

struct CeReport {
  Scenario scenario = Scenario::Strt;
  int stratum = 2;  // comparator
  TailPair tails;
  bool icer_defined = false;
  Interval icer;
  Interval inb;
  double theta = 0.0;
  std::string currency = "USD";
  std::vector<std::string> warnings;
};

/// Tails and covariance from two estimates of the same scenario on one fit.
TailPair tail_pair(const RmstEstimate& ref, const RmstEstimate& comp, const CoxFit& fit,
                   const VarianceOptions& opts = {});

/// ICER and INB with delta-method intervals. A degenerate denominator yields a warning
/// and icer_defined = false instead of an exception.
CeReport cost_effectiveness(const RmstEstimate& ref, const RmstEstimate& comp, const CoxFit& fit,
                            const CostSpec& costs, const IcerOptions& opts = {},
                            const VarianceOptions& vopts = {});
CeReport cost_effectiveness(Scenario scenario, int stratum, const TailPair& tails, const CostSpec& costs,
                            const IcerOptions& opts = {});

}  // namespace rmstcea
