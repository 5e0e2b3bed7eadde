#pragma once

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rmstcea/asymptotics.hpp"
#include "rmstcea/cox.hpp"
#include "rmstcea/data_model.hpp"

namespace testing {

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline rmstcea::SubjectRecord rec(std::string id, double entry, double exit, bool event, int stratum,
                                  std::vector<double> x, double delay = 0.0) {
  rmstcea::SubjectRecord r;
  r.subject_id = std::move(id);
  r.entry = entry;
  r.exit = exit;
  r.event = event;
  r.stratum = stratum;
  r.covariates = std::move(x);
  r.delay = delay;
  return r;
}

// Two-group data with switchers: group-2 subjects contribute a censored stratum-1 piece on
// (0, delay] and a stratum-2 piece on (delay, exit]. Exponential hazards, uniform covariates.
inline rmstcea::Dataset random_dataset(unsigned seed, std::size_t n, std::size_t p = 2, double eta = 10.0,
                                       double switch_share = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  rmstcea::Dataset d;
  d.p = p;
  d.eta = eta;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(p);
    double lp = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      x[k] = unif(gen) < 0.5 ? 0.0 : 1.0 + unif(gen);
      lp += (k == 0 ? -0.7 : 0.3) * x[k];
    }
    const std::string id = "s" + std::to_string(i);
    const bool group2 = i % 2 == 1;
    const double censor = -std::log(1.0 - unif(gen)) / 0.1;
    if (!group2) {
      const double t = -std::log(1.0 - unif(gen)) / (0.8 * std::exp(lp));
      const double e = std::min({t, censor, eta});
      d.records.push_back(rec(id, 0.0, e, t <= std::min(censor, eta), 1, x));
      continue;
    }
    const double delay = unif(gen) < switch_share ? 0.05 + 0.9 * unif(gen) : 0.0;
    const double t1 = -std::log(1.0 - unif(gen)) / (0.8 * std::exp(lp));
    if (delay > 0.0 && std::min(t1, censor) <= delay) {
      d.records.push_back(rec(id, 0.0, std::min(t1, censor), t1 <= censor, 1, x));
      continue;
    }
    const double t = delay - std::log(1.0 - unif(gen)) / (0.4 * std::exp(lp));
    const double e = std::min({t, censor, eta});
    if (delay > 0.0) d.records.push_back(rec(id, 0.0, delay, false, 1, x));
    d.records.push_back(rec(id, delay, e, t <= std::min(censor, eta), 2, x, delay));
  }
  return d;
}

inline rmstcea::AtomTable observed_atoms(const rmstcea::Dataset& d) {
  return rmstcea::compress_atoms(rmstcea::resolve_profile(rmstcea::CovariateProfile::observed(), d), d.p);
}

inline rmstcea::AtomTable fixed_atoms(std::vector<double> x) {
  std::vector<rmstcea::ProfileAtom> a{{1.0, x}};
  return rmstcea::compress_atoms(a, x.size());
}

}  // namespace testing
