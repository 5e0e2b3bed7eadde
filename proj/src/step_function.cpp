#include "rmstcea/step_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmstcea/error.hpp"

namespace rmstcea {

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double before)
    : knots_(std::move(knots)), values_(std::move(values)), before_(before) {
  if (knots_.size() != values_.size()) {
    throw PreconditionError("StepFunction: knots and values differ in length");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end()) ||
      std::adjacent_find(knots_.begin(), knots_.end()) != knots_.end()) {
    throw PreconditionError("StepFunction: knots must be strictly increasing");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return before_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::integrate(double lo, double hi) const {
  if (hi < lo) throw PreconditionError("StepFunction::integrate: hi < lo");
  double total = 0.0;
  double left = lo;
  double value = (*this)(lo);
  auto it = std::upper_bound(knots_.begin(), knots_.end(), lo);
  for (; it != knots_.end() && *it < hi; ++it) {
    total += value * (*it - left);
    left = *it;
    value = values_[static_cast<std::size_t>(it - knots_.begin())];
  }
  return total + value * (hi - left);
}

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw PreconditionError("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[a] = mid - half * z;
    rule.nodes[b] = mid + half * z;
    rule.weights[a] = half * w;
    rule.weights[b] = half * w;
  }
  return rule;
}

}  // namespace rmstcea
