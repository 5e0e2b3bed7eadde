#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "rmstcea/data_model.hpp"
#include "rmstcea/step_function.hpp"

namespace rmstcea {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct CoxConfig {
  int max_iter = 50;
  double tol_score = 1e-8;
  double tol_beta = 1e-10;
  double ridge = 0.0;  // added to the information; 0 = plain partial likelihood
  int max_halvings = 30;
};

/// Breslow cumulative baseline hazard of one stratum, evaluated at x = 0.
///
/// Risk-set sums are kept alongside the jumps because the variance kernels need them:
/// risk_sum[k] = sum_{at risk} exp(beta'x), risk_sum_x.row(k) = sum_{at risk} x exp(beta'x).
struct BaselineHazard {
  int stratum = 0;
  std::size_t n_records = 0;
  double min_entry = 0.0;
  std::vector<double> event_times;  // strictly increasing
  std::vector<double> events;       // tied death count d_k
  std::vector<double> at_risk;      // number of records at risk
  std::vector<double> risk_sum;
  Matrix risk_sum_x;  // (#events) x p
  std::vector<double> jumps;
  std::vector<double> cum;

  /// Lambda_0(t): sum of jumps at event times <= t.
  double cumhaz(double t) const;
  StepFunction cumulative() const;
  std::size_t size() const { return event_times.size(); }
};

struct CoxFit {
  Vector beta;
  Matrix info;             // observed information (negative Hessian), unnormalized
  Matrix info_normalized;  // info / n_total
  Matrix info_inverse;     // covariance of beta-hat
  double loglik = 0.0;
  double loglik_null = 0.0;  // at beta = 0
  std::vector<double> loglik_trace;
  double max_score = 0.0;
  double ridge = 0.0;
  std::size_t n_total = 0;  // distinct subjects
  std::size_t n_events = 0;
  std::size_t p = 0;
  bool converged = false;
  int iterations = 0;
  std::map<int, BaselineHazard> strata;

  const BaselineHazard& baseline(int stratum) const;
  double linear_predictor(std::span<const double> x) const;
  double relative_risk(std::span<const double> x) const;
  /// Standard errors sqrt(diag(info_inverse)).
  Vector standard_errors() const;
  /// Largest over strata of the minimum entry time.
  double max_min_entry() const;
};

/// Log partial likelihood, score and information of the stratified Breslow-ties model
/// at an arbitrary beta. Risk sets are {entry < t <= exit} within each stratum.
struct PartialLikelihood {
  double loglik = 0.0;
  Vector score;
  Matrix info;
};

PartialLikelihood partial_likelihood(const Dataset& dataset, const Vector& beta);

/// Fits the stratified Cox model by Newton iteration from beta = 0 with step halving.
///
/// Throws SingularInformationError when the information is not positive definite
/// (and ridge == 0), DivergedError when max_iter is exhausted, PreconditionError on
/// invalid data or when there are no events.
CoxFit fit(const Dataset& dataset, const CoxConfig& config = {});

/// Breslow estimator for one stratum at the given coefficients.
/// Throws PreconditionError if the stratum has no events.
BaselineHazard breslow(const Dataset& dataset, const Vector& beta, int stratum);

/// exp{-exp(beta'x) (Lambda_0j(t) - Lambda_0j(a))}; PreconditionError if t < a.
double survival(const CoxFit& fit, int stratum, std::span<const double> x, double t,
                double condition_from = 0.0);

}  // namespace rmstcea
