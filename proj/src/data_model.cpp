#include "rmstcea/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "rmstcea/error.hpp"
#include "rmstcea/step_function.hpp"

namespace rmstcea {

namespace {

constexpr double kWeightTolerance = 1e-12;

std::string fmt_num(double v) {
  std::string s = std::to_string(v);
  return s;
}

}  // namespace

std::map<int, std::size_t> Dataset::stratum_counts() const {
  std::map<int, std::size_t> counts;
  for (const auto& r : records) ++counts[r.stratum];
  return counts;
}

std::size_t Dataset::subject_count() const {
  std::unordered_set<std::string> ids;
  for (const auto& r : records) ids.insert(r.subject_id);
  return ids.size();
}

int Dataset::num_strata() const {
  int j = 0;
  for (const auto& r : records) j = std::max(j, r.stratum);
  return j;
}

double Dataset::max_min_entry() const {
  std::map<int, double> min_entry;
  for (const auto& r : records) {
    auto [it, inserted] = min_entry.try_emplace(r.stratum, r.entry);
    if (!inserted) it->second = std::min(it->second, r.entry);
  }
  double delta = 0.0;
  for (const auto& [s, e] : min_entry) delta = std::max(delta, e);
  return delta;
}

std::vector<double> Dataset::delays(int stratum) const {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.stratum == stratum) out.push_back(r.delay);
  return out;
}

std::vector<SubjectRecord> split_switcher_history(const RawSubject& raw) {
  if (!std::isfinite(raw.followup_end) || raw.followup_end <= 0.0) {
    throw PreconditionError("subject " + raw.subject_id + ": follow-up end must be positive");
  }
  std::vector<SubjectRecord> out;
  if (!raw.switch_time) {
    out.push_back({raw.subject_id, 0.0, raw.followup_end, raw.died, 1, raw.covariates, 0.0});
    return out;
  }
  const double delay = *raw.switch_time;
  if (!std::isfinite(delay) || delay < 0.0) {
    throw PreconditionError("subject " + raw.subject_id + ": negative switch time");
  }
  if (delay >= raw.followup_end) {
    throw PreconditionError("subject " + raw.subject_id +
                            ": switch time not before follow-up end (inconsistent history)");
  }
  if (delay > 0.0) {
    out.push_back({raw.subject_id, 0.0, delay, false, 1, raw.covariates, 0.0});
  }
  out.push_back({raw.subject_id, delay, raw.followup_end, raw.died, 2, raw.covariates, delay});
  return out;
}

const char* to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::EntryNotBeforeExit: return "EntryNotBeforeExit";
    case DiagnosticKind::NegativeTime: return "NegativeTime";
    case DiagnosticKind::NonFiniteValue: return "NonFiniteValue";
    case DiagnosticKind::DimensionMismatch: return "DimensionMismatch";
    case DiagnosticKind::InvalidStratum: return "InvalidStratum";
    case DiagnosticKind::InvalidDelay: return "InvalidDelay";
    case DiagnosticKind::EmptyStratum: return "EmptyStratum";
    case DiagnosticKind::HorizonNotAboveDelay: return "HorizonNotAboveDelay";
  }
  return "Unknown";
}

std::vector<Diagnostic> validate(const Dataset& dataset, std::span<const int> strata) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    const bool finite = std::isfinite(r.entry) && std::isfinite(r.exit) &&
                        std::all_of(r.covariates.begin(), r.covariates.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) {
      out.push_back({DiagnosticKind::NonFiniteValue, i, r.stratum, "non-finite time or covariate"});
      continue;
    }
    if (r.entry < 0.0) {
      out.push_back({DiagnosticKind::NegativeTime, i, r.stratum, "entry < 0"});
    }
    if (!(r.entry < r.exit)) {
      out.push_back({DiagnosticKind::EntryNotBeforeExit, i, r.stratum,
                     "entry " + fmt_num(r.entry) + " >= exit " + fmt_num(r.exit)});
    }
    if (r.covariates.size() != dataset.p) {
      out.push_back({DiagnosticKind::DimensionMismatch, i, r.stratum,
                     "covariate length " + std::to_string(r.covariates.size()) + " != p " +
                         std::to_string(dataset.p)});
    }
    if (r.stratum < 1) {
      out.push_back({DiagnosticKind::InvalidStratum, i, r.stratum, "stratum must be >= 1"});
    }
    if (!std::isfinite(r.delay) || r.delay < 0.0) {
      out.push_back({DiagnosticKind::InvalidDelay, i, r.stratum, "delay must be finite and >= 0"});
    }
  }

  const auto counts = dataset.stratum_counts();
  std::vector<int> wanted(strata.begin(), strata.end());
  if (wanted.empty()) {
    for (int j = 1; j <= dataset.num_strata(); ++j) wanted.push_back(j);
  }
  for (int j : wanted) {
    auto it = counts.find(j);
    if (it == counts.end() || it->second == 0) {
      out.push_back({DiagnosticKind::EmptyStratum, std::nullopt, j,
                     "stratum " + std::to_string(j) + " has no records"});
    }
  }

  if (!dataset.records.empty()) {
    const double delta = dataset.max_min_entry();
    if (!(dataset.eta > delta)) {
      out.push_back({DiagnosticKind::HorizonNotAboveDelay, std::nullopt, 0,
                     "eta " + fmt_num(dataset.eta) + " <= max-of-min delay " + fmt_num(delta)});
    }
  }
  return out;
}

CovariateProfile CovariateProfile::observed() { return {}; }

CovariateProfile CovariateProfile::fixed(std::vector<double> x) {
  CovariateProfile p;
  p.kind = ProfileKind::Fixed;
  p.fixed_x = std::move(x);
  return p;
}

CovariateProfile CovariateProfile::weighted(std::vector<ProfileAtom> atoms) {
  CovariateProfile p;
  p.kind = ProfileKind::Weighted;
  p.atoms = std::move(atoms);
  return p;
}

std::vector<ProfileAtom> resolve_profile(const CovariateProfile& profile, const Dataset& dataset) {
  switch (profile.kind) {
    case ProfileKind::Observed: {
      std::vector<ProfileAtom> atoms;
      std::unordered_set<std::string> seen;
      for (const auto& r : dataset.records) {
        if (!seen.insert(r.subject_id).second) continue;
        if (r.covariates.size() != dataset.p) {
          throw PreconditionError("resolve_profile: record covariate dimension mismatch");
        }
        atoms.push_back({0.0, r.covariates});
      }
      if (atoms.empty()) throw PreconditionError("resolve_profile: empty dataset");
      const double w = 1.0 / static_cast<double>(atoms.size());
      for (auto& a : atoms) a.weight = w;
      return atoms;
    }
    case ProfileKind::Fixed:
      if (profile.fixed_x.size() != dataset.p) {
        throw PreconditionError("resolve_profile: fixed profile has dimension " +
                                std::to_string(profile.fixed_x.size()) + ", expected " +
                                std::to_string(dataset.p));
      }
      return {{1.0, profile.fixed_x}};
    case ProfileKind::Weighted: {
      if (profile.atoms.empty()) throw PreconditionError("resolve_profile: no atoms");
      double total = 0.0;
      for (const auto& a : profile.atoms) {
        if (a.x.size() != dataset.p) {
          throw PreconditionError("resolve_profile: weighted atom dimension mismatch");
        }
        if (!(a.weight >= 0.0)) throw PreconditionError("resolve_profile: negative weight");
        total += a.weight;
      }
      if (std::abs(total - 1.0) > kWeightTolerance) {
        throw PreconditionError("resolve_profile: weights sum to " + fmt_num(total));
      }
      return profile.atoms;
    }
  }
  throw PreconditionError("resolve_profile: unknown profile kind");
}

DelaySpec DelaySpec::none() { return {}; }

DelaySpec DelaySpec::fixed(double a) {
  DelaySpec d;
  d.kind = DelayKind::Fixed;
  d.fixed_delay = a;
  return d;
}

DelaySpec DelaySpec::empirical(std::vector<double> delays) {
  DelaySpec d;
  d.kind = DelayKind::Empirical;
  d.observed = std::move(delays);
  return d;
}

DelaySpec DelaySpec::empirical(const Dataset& dataset, int stratum) {
  return empirical(dataset.delays(stratum));
}

DelaySpec DelaySpec::discrete(std::vector<DelayAtom> atoms) {
  DelaySpec d;
  d.kind = DelayKind::Discrete;
  d.atoms = std::move(atoms);
  return d;
}

DelaySpec DelaySpec::mixture_exp(double zero_mass, double rate) {
  DelaySpec d;
  d.kind = DelayKind::MixtureExp;
  d.zero_mass = zero_mass;
  d.rate = rate;
  return d;
}

DelayAtoms delay_atoms(const DelaySpec& spec, double eta) {
  DelayAtoms out;
  auto check_atom = [eta](double delay) {
    if (!std::isfinite(delay) || delay < 0.0 || delay >= eta) {
      throw PreconditionError("delay atom " + fmt_num(delay) + " outside [0, eta)");
    }
  };
  switch (spec.kind) {
    case DelayKind::None:
      out.atoms.push_back({1.0, 0.0});
      break;
    case DelayKind::Fixed:
      check_atom(spec.fixed_delay);
      out.atoms.push_back({1.0, spec.fixed_delay});
      break;
    case DelayKind::Empirical: {
      if (spec.observed.empty()) throw PreconditionError("empirical delay list is empty");
      const double w = 1.0 / static_cast<double>(spec.observed.size());
      for (double d : spec.observed) {
        check_atom(d);
        out.atoms.push_back({w, d});
      }
      break;
    }
    case DelayKind::Discrete: {
      if (spec.atoms.empty()) throw PreconditionError("discrete delay list is empty");
      double total = 0.0;
      for (const auto& a : spec.atoms) {
        check_atom(a.delay);
        if (!(a.probability >= 0.0)) throw PreconditionError("negative delay probability");
        total += a.probability;
      }
      if (std::abs(total - 1.0) > kWeightTolerance) {
        throw PreconditionError("delay probabilities sum to " + fmt_num(total));
      }
      out.atoms = spec.atoms;
      break;
    }
    case DelayKind::MixtureExp: {
      if (!(spec.zero_mass >= 0.0 && spec.zero_mass <= 1.0)) {
        throw PreconditionError("mixture point mass must lie in [0, 1]");
      }
      if (!(spec.rate > 0.0)) throw PreconditionError("mixture rate must be positive");
      if (!(eta > 0.0)) throw PreconditionError("eta must be positive");
      const double below = -std::expm1(-spec.rate * eta);  // P(delay < eta | continuous part)
      out.truncated_mass = (1.0 - spec.zero_mass) * (1.0 - below);
      if (spec.zero_mass > 0.0) out.atoms.push_back({spec.zero_mass, 0.0});
      if (spec.zero_mass < 1.0) {
        const auto rule = gauss_legendre(64, 0.0, eta);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          const double dens = spec.rate * std::exp(-spec.rate * rule.nodes[k]) / below;
          out.atoms.push_back({(1.0 - spec.zero_mass) * rule.weights[k] * dens, rule.nodes[k]});
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace rmstcea
