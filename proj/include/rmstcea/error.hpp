#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rmstcea {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration did not converge; carries the last iterate.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::vector<double> last_beta)
      : Error(what), last_beta_(std::move(last_beta)) {}
  const std::vector<double>& last_beta() const noexcept { return last_beta_; }

 private:
  std::vector<double> last_beta_;
};

/// Observed information is not positive definite (e.g. collinear or constant covariates).
class SingularInformationError : public Error {
 public:
  using Error::Error;
};

/// Conditioning survival probability is zero, so the conditional RMST is undefined.
class DegenerateConditioningError : public Error {
 public:
  using Error::Error;
};

/// ICER denominator |mu_j - mu_1| fell below the configured floor.
class DegenerateDenominatorError : public Error {
 public:
  DegenerateDenominatorError(const std::string& what, double mu1, double muj)
      : Error(what), mu1_(mu1), muj_(muj) {}
  double mu1() const noexcept { return mu1_; }
  double muj() const noexcept { return muj_; }

 private:
  double mu1_;
  double muj_;
};

/// The requested closed form does not exist for this design.
class NoClosedFormError : public Error {
 public:
  using Error::Error;
};

/// Variance is not available for this input (e.g. continuous delay mixtures).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug or malformed data that slipped past validation.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Parse/ingestion failure with the offending line number (1-based, header = line 1).
class RowError : public Error {
 public:
  RowError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rmstcea
