#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rmstcea/asymptotics.hpp"
#include "rmstcea/cox.hpp"
#include "rmstcea/data_model.hpp"

namespace rmstcea {

enum class Scenario { Strt, Dly, Dst };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

/// Linearizations kept with an estimate so variances and covariances can be formed later.
struct RmstKernels {
  Linearization full;  // value
  Linearization tail;  // value_tail
  bool variance_supported = true;
};

struct RmstEstimate {
  Scenario scenario = Scenario::Strt;
  int stratum = 1;
  double value = 0.0;
  double value_tail = 0.0;
  double lower = 0.0;  // r (STRT), a (DLY), 0 (DST)
  double eta = 0.0;
  AtomTable profile;
  std::vector<double> grid;  // union of segment quadrature points, plus eta
  DelayAtoms delays;         // DST only
  std::vector<std::string> warnings;
  std::shared_ptr<const RmstKernels> kernel_cache;
};

/// Profile-averaged RMST on [r, eta) conditional on survival to r.
/// Requires r > max-of-min entry (r == 0 is accepted when every stratum starts at 0).
RmstEstimate rmst_strt(const CoxFit& fit, int stratum, const AtomTable& profile, double r, double eta);

/// RMST from eligibility with treatment j started at delay a.
RmstEstimate rmst_dly(const CoxFit& fit, int stratum, const AtomTable& profile, double a, double eta);

/// DLY averaged over a delay distribution.
RmstEstimate rmst_dst(const CoxFit& fit, int stratum, const AtomTable& profile, const DelaySpec& delays,
                      double eta);

enum class Component { Full, Tail };

VarianceReport rmst_variance(const RmstEstimate& est, const CoxFit& fit, Component which = Component::Full,
                             const VarianceOptions& opts = {});
double rmst_covariance(const RmstEstimate& a, const RmstEstimate& b, const CoxFit& fit,
                       Component which = Component::Full);

}  // namespace rmstcea
