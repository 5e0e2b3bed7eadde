#pragma once

#include <span>
#include <vector>

namespace rmstcea {

/// Right-continuous piecewise-constant function.
///
/// Takes `before` on (-inf, knots[0]) and values[k] on [knots[k], knots[k+1]); the
/// last value extends to +inf.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double before = 0.0);

  double operator()(double t) const;

  /// Exact integral over [lo, hi] (lo <= hi).
  double integrate(double lo, double hi) const;

  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  double before() const { return before_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double before_ = 0.0;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [lo, hi].
QuadratureRule gauss_legendre(int n, double lo, double hi);

}  // namespace rmstcea
