#include "rmstcea/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rmstcea/error.hpp"
#include "rmstcea/simd/kernels.hpp"

namespace rmstcea {

namespace {

struct StratumIndex {
  int stratum = 0;
  std::vector<std::size_t> by_exit;   // record indices, exit descending
  std::vector<std::size_t> by_entry;  // record indices, entry descending
  std::vector<double> times;          // distinct event times, descending
  double min_entry = 0.0;
};

// Centered, column-major copy of the covariates plus per-stratum sweep orders.
struct Design {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> xc;
  Vector mean;
  std::vector<double> entry, exit;
  std::vector<char> event;
  std::vector<StratumIndex> strata;

  double x(std::size_t i, std::size_t d) const { return xc[d * n + i]; }
};

Design build_design(const Dataset& ds) {
  Design des;
  des.n = ds.records.size();
  des.p = ds.p;
  des.mean = Vector::Zero(static_cast<Eigen::Index>(des.p));
  for (const auto& r : ds.records)
    for (std::size_t d = 0; d < des.p; ++d) des.mean[static_cast<Eigen::Index>(d)] += r.covariates[d];
  if (des.n > 0) des.mean /= static_cast<double>(des.n);
  des.xc.resize(des.n * des.p);
  des.entry.resize(des.n);
  des.exit.resize(des.n);
  des.event.resize(des.n);
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < des.n; ++i) {
    const auto& r = ds.records[i];
    for (std::size_t d = 0; d < des.p; ++d)
      des.xc[d * des.n + i] = r.covariates[d] - des.mean[static_cast<Eigen::Index>(d)];
    des.entry[i] = r.entry;
    des.exit[i] = r.exit;
    des.event[i] = r.event ? 1 : 0;
    members[r.stratum].push_back(i);
  }
  for (auto& [s, idx] : members) {
    StratumIndex si;
    si.stratum = s;
    si.by_exit = idx;
    si.by_entry = idx;
    std::stable_sort(si.by_exit.begin(), si.by_exit.end(),
                     [&](std::size_t a, std::size_t b) { return des.exit[a] > des.exit[b]; });
    std::stable_sort(si.by_entry.begin(), si.by_entry.end(),
                     [&](std::size_t a, std::size_t b) { return des.entry[a] > des.entry[b]; });
    for (std::size_t i : si.by_exit)
      if (des.event[i] && (si.times.empty() || si.times.back() != des.exit[i])) si.times.push_back(des.exit[i]);
    si.min_entry = des.entry[si.by_entry.back()];
    des.strata.push_back(std::move(si));
  }
  return des;
}

// Per-event-time risk-set sums in centered coordinates, ascending time order.
struct StratumSums {
  std::vector<double> t, d, count, s0;
  std::vector<Vector> s1;
};

PartialLikelihood evaluate(const Design& des, const Vector& beta, std::vector<StratumSums>* out) {
  const std::size_t n = des.n;
  const std::size_t p = des.p;
  const auto pi = static_cast<Eigen::Index>(p);
  std::vector<double> lp(n, 0.0);
  if (p > 0) simd::linear_predictor(des.xc, std::span<const double>(beta.data(), p), lp);
  std::vector<double> risk = lp;
  simd::exp_inplace(risk);

  PartialLikelihood res{0.0, Vector::Zero(pi), Matrix::Zero(pi, pi)};
  Vector s1(pi), ev_x(pi);
  Matrix s2(pi, pi);
  if (out) out->clear();

  for (const auto& si : des.strata) {
    double s0 = 0.0, count = 0.0;
    s1.setZero();
    s2.setZero();
    std::size_t ai = 0, ri = 0;
    StratumSums sums;

    auto accumulate = [&](std::size_t i, double sign) {
      const double w = sign * risk[i];
      s0 += w;
      count += sign;
      for (std::size_t a = 0; a < p; ++a) {
        const double wa = w * des.x(i, a);
        s1[static_cast<Eigen::Index>(a)] += wa;
        for (std::size_t b = 0; b <= a; ++b) s2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += wa * des.x(i, b);
      }
    };

    for (double t : si.times) {
      double d = 0.0, ev_lp = 0.0;
      ev_x.setZero();
      for (; ai < si.by_exit.size() && des.exit[si.by_exit[ai]] >= t; ++ai) {
        const std::size_t i = si.by_exit[ai];
        accumulate(i, 1.0);
        if (des.event[i] && des.exit[i] == t) {
          d += 1.0;
          ev_lp += lp[i];
          for (std::size_t a = 0; a < p; ++a) ev_x[static_cast<Eigen::Index>(a)] += des.x(i, a);
        }
      }
      for (; ri < si.by_entry.size() && des.entry[si.by_entry[ri]] >= t; ++ri) accumulate(si.by_entry[ri], -1.0);
      if (!(s0 > 0.0)) throw InvariantError("empty risk set at an event time");

      res.loglik += ev_lp - d * std::log(s0);
      if (p > 0) {
        res.score += ev_x - (d / s0) * s1;
        Matrix m = s2.selfadjointView<Eigen::Lower>();
        res.info += d * (m / s0 - (s1 * s1.transpose()) / (s0 * s0));
      }
      if (out) {
        sums.t.push_back(t);
        sums.d.push_back(d);
        sums.count.push_back(count);
        sums.s0.push_back(s0);
        sums.s1.push_back(s1);
      }
    }
    if (out) {
      std::reverse(sums.t.begin(), sums.t.end());
      std::reverse(sums.d.begin(), sums.d.end());
      std::reverse(sums.count.begin(), sums.count.end());
      std::reverse(sums.s0.begin(), sums.s0.end());
      std::reverse(sums.s1.begin(), sums.s1.end());
      out->push_back(std::move(sums));
    }
  }
  return res;
}

BaselineHazard make_baseline(const Design& des, const StratumIndex& si, const StratumSums& sums,
                             const Vector& beta) {
  BaselineHazard bh;
  bh.stratum = si.stratum;
  bh.n_records = si.by_exit.size();
  bh.min_entry = si.min_entry;
  const std::size_t m = sums.t.size();
  const auto pi = static_cast<Eigen::Index>(des.p);
  // Undo the centering: sum exp(beta'x) = exp(beta'mean) * sum exp(beta'(x - mean)).
  const double shift = des.p > 0 ? std::exp(beta.dot(des.mean)) : 1.0;
  bh.event_times = sums.t;
  bh.events = sums.d;
  bh.at_risk = sums.count;
  bh.risk_sum.resize(m);
  bh.risk_sum_x = Matrix::Zero(static_cast<Eigen::Index>(m), pi);
  bh.jumps.resize(m);
  bh.cum.resize(m);
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    bh.risk_sum[k] = shift * sums.s0[k];
    if (des.p > 0) bh.risk_sum_x.row(static_cast<Eigen::Index>(k)) = (shift * (sums.s1[k] + des.mean * sums.s0[k])).transpose();
    bh.jumps[k] = sums.d[k] / bh.risk_sum[k];
    acc += bh.jumps[k];
    bh.cum[k] = acc;
  }
  return bh;
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void require_positive_definite(const Matrix& info) {
  if (info.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(info, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
    std::ostringstream os;
    os << "information matrix is singular (eigenvalues in [" << lo << ", " << hi
       << "]); covariates may be constant or collinear";
    throw SingularInformationError(os.str());
  }
}

void require_valid(const Dataset& ds) {
  std::vector<int> present;
  for (const auto& [s, n] : ds.stratum_counts()) present.push_back(s);
  auto diags = validate(ds, present);
  std::erase_if(diags, [](const Diagnostic& d) { return d.kind == DiagnosticKind::HorizonNotAboveDelay; });
  if (!diags.empty()) {
    std::string msg = "invalid dataset:";
    for (const auto& d : diags) msg += std::string(" ") + to_string(d.kind) + "(" + d.message + ")";
    throw PreconditionError(msg);
  }
}

}  // namespace

double BaselineHazard::cumhaz(double t) const {
  auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
  if (it == event_times.begin()) return 0.0;
  return cum[static_cast<std::size_t>(it - event_times.begin()) - 1];
}

StepFunction BaselineHazard::cumulative() const { return StepFunction(event_times, cum, 0.0); }

const BaselineHazard& CoxFit::baseline(int stratum) const {
  auto it = strata.find(stratum);
  if (it == strata.end()) throw PreconditionError("stratum " + std::to_string(stratum) + " not in fit");
  return it->second;
}

double CoxFit::linear_predictor(std::span<const double> x) const {
  if (x.size() != p) throw PreconditionError("covariate vector has wrong dimension");
  double lp = 0.0;
  for (std::size_t d = 0; d < p; ++d) lp += beta[static_cast<Eigen::Index>(d)] * x[d];
  return lp;
}

double CoxFit::relative_risk(std::span<const double> x) const { return std::exp(linear_predictor(x)); }

Vector CoxFit::standard_errors() const { return info_inverse.diagonal().cwiseSqrt(); }

double CoxFit::max_min_entry() const {
  double delta = 0.0;
  for (const auto& [s, bh] : strata) delta = std::max(delta, bh.min_entry);
  return delta;
}

PartialLikelihood partial_likelihood(const Dataset& dataset, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != dataset.p) throw PreconditionError("beta has wrong dimension");
  require_valid(dataset);
  return evaluate(build_design(dataset), beta, nullptr);
}

BaselineHazard breslow(const Dataset& dataset, const Vector& beta, int stratum) {
  if (static_cast<std::size_t>(beta.size()) != dataset.p) throw PreconditionError("beta has wrong dimension");
  require_valid(dataset);
  const Design des = build_design(dataset);
  std::vector<StratumSums> sums;
  evaluate(des, beta, &sums);
  for (std::size_t k = 0; k < des.strata.size(); ++k) {
    if (des.strata[k].stratum != stratum) continue;
    if (sums[k].t.empty()) throw PreconditionError("stratum " + std::to_string(stratum) + " has no events");
    return make_baseline(des, des.strata[k], sums[k], beta);
  }
  throw PreconditionError("stratum " + std::to_string(stratum) + " has no records");
}

CoxFit fit(const Dataset& dataset, const CoxConfig& config) {
  require_valid(dataset);
  if (config.ridge < 0.0) throw PreconditionError("ridge must be >= 0");
  const std::size_t n_events = static_cast<std::size_t>(std::count_if(
      dataset.records.begin(), dataset.records.end(), [](const SubjectRecord& r) { return r.event; }));
  if (n_events == 0) throw PreconditionError("no events in dataset");

  const Design des = build_design(dataset);
  const auto pi = static_cast<Eigen::Index>(des.p);
  const Matrix ridge = config.ridge * Matrix::Identity(pi, pi);

  auto penalized = [&](const Vector& b) {
    PartialLikelihood pl = evaluate(des, b, nullptr);
    if (config.ridge > 0.0) {
      pl.loglik -= 0.5 * config.ridge * b.squaredNorm();
      pl.score -= config.ridge * b;
      pl.info += ridge;
    }
    return pl;
  };

  CoxFit out;
  out.p = des.p;
  out.ridge = config.ridge;
  out.n_total = dataset.subject_count();
  out.n_events = n_events;
  Vector beta = Vector::Zero(pi);
  PartialLikelihood cur = penalized(beta);
  out.loglik_null = cur.loglik;
  out.loglik_trace.push_back(cur.loglik);

  if (des.p == 0) {
    out.converged = true;
  } else {
    for (int iter = 1; iter <= config.max_iter && !out.converged; ++iter) {
      require_positive_definite(cur.info);
      if (max_abs(cur.score) < config.tol_score) {
        out.converged = true;
        break;
      }
      const Vector step = cur.info.ldlt().solve(cur.score);
      const double slack = 1e-12 * std::max(1.0, std::abs(cur.loglik));
      double scale = 1.0;
      bool accepted = false;
      Vector cand;
      PartialLikelihood next;
      for (int h = 0; h <= config.max_halvings; ++h, scale *= 0.5) {
        cand = beta + scale * step;
        next = penalized(cand);
        if (std::isfinite(next.loglik) && next.loglik >= cur.loglik - slack) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        throw DivergedError("step halving exhausted without increasing the partial likelihood",
                            std::vector<double>(beta.data(), beta.data() + beta.size()));
      }
      const double rel = max_abs(cand - beta) / std::max(1.0, max_abs(cand));
      beta = cand;
      cur = next;
      out.iterations = iter;
      out.loglik_trace.push_back(cur.loglik);
      if (max_abs(cur.score) < config.tol_score || rel < config.tol_beta) out.converged = true;
    }
    if (!out.converged) {
      throw DivergedError("Newton iteration did not converge in " + std::to_string(config.max_iter) +
                              " iterations",
                          std::vector<double>(beta.data(), beta.data() + beta.size()));
    }
    require_positive_definite(cur.info);
  }

  out.beta = beta;
  out.loglik = cur.loglik;
  out.max_score = max_abs(cur.score);
  out.info = cur.info;
  out.info_normalized = cur.info / static_cast<double>(out.n_total);
  out.info_inverse = des.p > 0 ? Matrix(cur.info.ldlt().solve(Matrix::Identity(pi, pi))) : Matrix(0, 0);

  std::vector<StratumSums> sums;
  evaluate(des, beta, &sums);
  for (std::size_t k = 0; k < des.strata.size(); ++k) {
    out.strata.emplace(des.strata[k].stratum, make_baseline(des, des.strata[k], sums[k], beta));
  }
  return out;
}

double survival(const CoxFit& fit, int stratum, std::span<const double> x, double t, double condition_from) {
  if (t < condition_from) throw PreconditionError("survival: t is below the conditioning time");
  if (condition_from < 0.0) throw PreconditionError("survival: conditioning time must be >= 0");
  const BaselineHazard& bh = fit.baseline(stratum);
  const double dl = bh.cumhaz(t) - bh.cumhaz(condition_from);
  return std::exp(-fit.relative_risk(x) * dl);
}

}  // namespace rmstcea
