#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmstcea/asymptotics.hpp"
#include "rmstcea/cea.hpp"
#include "rmstcea/data_model.hpp"
#include "rmstcea/rmst.hpp"
#include "rmstcea/rng.hpp"

namespace rmstcea {

/// Two-arm design with a Bernoulli covariate and (piecewise) Weibull hazards.
///
/// Group 1 has hazard lambda01 k t^(k-1) e^(beta X). A delayed group-2 subject keeps
/// that hazard until its delay and switches to lambda02 k t^(k-1) e^(beta X) afterwards;
/// undelayed group-2 subjects start on lambda02 at t = 0. k = weibull_shape (1 gives
/// constant hazards, the only case with closed forms).
struct SimDesign {
  std::size_t n = 1000;
  double lambda01 = 1.0;
  double lambda02 = 0.5;
  double beta = -2.0;
  double covariate_p = 0.9;
  double censor_rate = 0.01;
  double delay_fraction = 0.0;  // share of group 2 that starts treatment late
  double delay_lo = 0.0;        // delays ~ U(delay_lo, delay_hi) unless delay_dist is set
  double delay_hi = 1.0;
  std::optional<DelaySpec> delay_dist;
  double weibull_shape = 1.0;
  double eta = 10.0;
  CostSpec costs{{115.0, 330.0}, 1352.0, "USD"};
  std::size_t replicates = 200;
  std::uint64_t seed = 20240917;

  void validate() const;
};

/// Counting-process dataset plus the generation diagnostics of one replicate.
struct SimDataset {
  Dataset data;
  std::size_t group1 = 0;
  std::size_t group2 = 0;
  std::size_t censored1 = 0;        // group-1 subjects without an observed death
  std::size_t censored2 = 0;
  std::size_t died_during_delay = 0;  // group-2 deaths before their delay
};

SimDataset generate_dataset(const SimDesign& design, std::uint64_t replicate);

/// Analysis performed on every replicate.
struct StudyScenario {
  std::string label;
  Scenario scenario = Scenario::Dly;
  double time = 0.0;  // r for STRT, a for DLY
  DelaySpec delays;   // DST

  static StudyScenario no_delay();
  static StudyScenario strt(double r);
  static StudyScenario dly(double a);
  static StudyScenario dst(DelaySpec delays, std::string label = "dst");
};

struct TheoreticalValues {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double mu1_tail = 0.0;
  double mu2_tail = 0.0;
  double icer = 0.0;
  double inb = 0.0;
  double icer_limit = 0.0;  // eta -> infinity
};

/// Closed forms for constant hazards and a Bernoulli covariate. Throws
/// NoClosedFormError for other designs or for delay mixtures without atoms.
TheoreticalValues theoretical_values(const SimDesign& design, const StudyScenario& scenario);
/// (c2 lambda01 - c1 lambda02) / (lambda01 - lambda02).
double limiting_icer(double lambda01, double lambda02, double c1, double c2);

struct StudyRow {
  std::string scenario;
  std::string estimand;  // rmst1, rmst2, icer, inb
  double truth = 0.0;
  double mean = 0.0;
  double rel_bias_pct = 0.0;
  double mean_se = 0.0;
  double sd = 0.0;
  double se_rel_bias_pct = 0.0;  // 100 (mean SE / SD - 1)
  double coverage = 0.0;
  std::size_t used = 0;
  std::size_t failed = 0;
};

struct StudyDiagnostics {
  double censoring1 = 0.0;
  double censoring2 = 0.0;
  double missing_treatment = 0.0;  // share of group 2 dying during the delay
  double failure_rate = 0.0;
};

struct StudyResult {
  SimDesign design;
  std::vector<StudyRow> rows;
  StudyDiagnostics diagnostics;
  std::vector<std::string> warnings;
  std::size_t threads = 1;
};

struct StudyOptions {
  std::size_t threads = 0;  // 0: RMSTCEA_THREADS or hardware concurrency
  VarianceOptions variance;
};

/// Worker count from RMSTCEA_THREADS, else hardware concurrency (at least 1).
std::size_t default_threads();

StudyResult run_study(const SimDesign& design, const std::vector<StudyScenario>& scenarios,
                      const StudyOptions& opts = {});

}  // namespace rmstcea
