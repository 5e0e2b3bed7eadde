#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rmstcea {

/// One at-risk interval (entry, exit] in counting-process form.
///
/// A subject that switches treatment contributes one record per stratum. Times are
/// years since eligibility; `delay` is the treatment-initiation delay (0 for records
/// that never left stratum 1).
struct SubjectRecord {
  std::string subject_id;
  double entry = 0.0;
  double exit = 0.0;
  bool event = false;
  int stratum = 1;
  std::vector<double> covariates;
  double delay = 0.0;
};

struct Dataset {
  std::vector<SubjectRecord> records;
  std::size_t p = 0;  // covariate dimension
  double eta = 0.0;   // analysis horizon

  /// Record count per stratum (n_j).
  std::map<int, std::size_t> stratum_counts() const;
  /// Number of distinct subject identifiers.
  std::size_t subject_count() const;
  /// Largest stratum index present (J), 0 for an empty dataset.
  int num_strata() const;
  /// Maximum over strata of the minimum entry time: the earliest time from which
  /// every stratum's baseline hazard is estimable.
  double max_min_entry() const;
  /// Delays observed in `stratum`, in record order.
  std::vector<double> delays(int stratum) const;
};

/// Raw subject history measured from eligibility (t = 0).
struct RawSubject {
  std::string subject_id;
  double followup_end = 0.0;
  bool died = false;
  std::optional<double> switch_time;  // delay before starting treatment 2
  std::vector<double> covariates;
};

/// Converts a switcher history into counting-process records.
///
/// Non-switchers yield one stratum-1 record. Switchers yield a censored stratum-1
/// record on (0, delay] and a stratum-2 record on (delay, end]; the stratum-1 piece is
/// dropped when delay == 0. Throws PreconditionError on inconsistent histories.
std::vector<SubjectRecord> split_switcher_history(const RawSubject& raw);

enum class DiagnosticKind {
  EntryNotBeforeExit,
  NegativeTime,
  NonFiniteValue,
  DimensionMismatch,
  InvalidStratum,
  InvalidDelay,
  EmptyStratum,
  HorizonNotAboveDelay,
};

const char* to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::optional<std::size_t> record;  // index into Dataset::records
  int stratum = 0;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

/// Checks every dataset invariant and returns one diagnostic per violation.
/// `strata` lists the strata the analysis will use; empty means 1..J.
std::vector<Diagnostic> validate(const Dataset& dataset, std::span<const int> strata = {});

enum class ProfileKind { Observed, Fixed, Weighted };

struct ProfileAtom {
  double weight = 0.0;
  std::vector<double> x;

  bool operator==(const ProfileAtom&) const = default;
};

/// Covariate distribution over which RMSTs are averaged.
struct CovariateProfile {
  ProfileKind kind = ProfileKind::Observed;
  std::vector<double> fixed_x;
  std::vector<ProfileAtom> atoms;

  static CovariateProfile observed();
  static CovariateProfile fixed(std::vector<double> x);
  static CovariateProfile weighted(std::vector<ProfileAtom> atoms);

  bool operator==(const CovariateProfile&) const = default;
};

/// Expands a profile into weighted covariate vectors.
///
/// Observed yields one atom per distinct subject (weight 1/n); Fixed yields a single
/// atom; Weighted is returned verbatim. Throws PreconditionError on dimension
/// mismatch or on weights that do not sum to one.
std::vector<ProfileAtom> resolve_profile(const CovariateProfile& profile, const Dataset& dataset);

enum class DelayKind { None, Fixed, Empirical, Discrete, MixtureExp };

struct DelayAtom {
  double probability = 0.0;
  double delay = 0.0;

  bool operator==(const DelayAtom&) const = default;
};

/// Distribution of treatment-initiation delays used by the averaged-delay scenario.
struct DelaySpec {
  DelayKind kind = DelayKind::None;
  double fixed_delay = 0.0;            // Fixed
  std::vector<double> observed;        // Empirical
  std::vector<DelayAtom> atoms;        // Discrete
  double zero_mass = 0.0;              // MixtureExp: point mass at 0
  double rate = 1.0;                   // MixtureExp: exponential rate of the rest

  static DelaySpec none();
  static DelaySpec fixed(double a);
  static DelaySpec empirical(std::vector<double> delays);
  static DelaySpec empirical(const Dataset& dataset, int stratum);
  static DelaySpec discrete(std::vector<DelayAtom> atoms);
  static DelaySpec mixture_exp(double zero_mass, double rate);

  bool is_continuous() const { return kind == DelayKind::MixtureExp; }
  bool operator==(const DelaySpec&) const = default;
};

/// Discretized delay distribution on [0, eta).
struct DelayAtoms {
  std::vector<DelayAtom> atoms;
  double truncated_mass = 0.0;  // probability beyond eta dropped (MixtureExp only)
};

/// Resolves a delay specification to weighted atoms. MixtureExp is discretized by
/// 64-point Gauss-Legendre on [0, eta] and renormalized to the mass below eta.
DelayAtoms delay_atoms(const DelaySpec& spec, double eta);

}  // namespace rmstcea
