#include "rmstcea/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rmstcea/error.hpp"
#include "rmstcea/simd/kernels.hpp"

namespace rmstcea {

namespace {

using Idx = Eigen::Index;

// Index of the first event time strictly greater than t.
std::size_t first_after(const BaselineHazard& bh, double t) {
  return static_cast<std::size_t>(std::upper_bound(bh.event_times.begin(), bh.event_times.end(), t) -
                                  bh.event_times.begin());
}

// Running sum of d * S1 / S0^2 over events <= t (row-vector of length p).
Vector cumulative_h(const BaselineHazard& bh, std::size_t p, std::size_t from, std::size_t to) {
  Vector h = Vector::Zero(static_cast<Idx>(p));
  for (std::size_t k = from; k < to; ++k) {
    const double s0 = bh.risk_sum[k];
    h += (bh.events[k] / (s0 * s0)) * bh.risk_sum_x.row(static_cast<Idx>(k)).transpose();
  }
  return h;
}

}  // namespace

std::vector<double> AtomTable::atom(std::size_t k) const {
  std::vector<double> out(p);
  for (std::size_t d = 0; d < p; ++d) out[d] = x[d * size() + k];
  return out;
}

AtomTable compress_atoms(std::span<const ProfileAtom> atoms, std::size_t p) {
  std::map<std::vector<double>, std::size_t> slot;
  std::vector<std::vector<double>> xs;
  std::vector<double> w;
  for (const auto& a : atoms) {
    if (a.x.size() != p) throw PreconditionError("profile atom has wrong dimension");
    auto [it, inserted] = slot.try_emplace(a.x, xs.size());
    if (inserted) {
      xs.push_back(a.x);
      w.push_back(a.weight);
    } else {
      w[it->second] += a.weight;
    }
  }
  AtomTable t;
  t.p = p;
  t.weight = std::move(w);
  const std::size_t k_atoms = xs.size();
  t.x.resize(p * k_atoms);
  for (std::size_t k = 0; k < k_atoms; ++k)
    for (std::size_t d = 0; d < p; ++d) t.x[d * k_atoms + k] = xs[k][d];
  return t;
}

KernelSet build_kernels(const CoxFit& fit, const AtomTable& atoms, const Window& window) {
  if (atoms.p != fit.p) throw PreconditionError("profile dimension does not match the fit");
  if (atoms.size() == 0) throw PreconditionError("empty covariate profile");
  if (!(window.condition >= 0.0 && window.condition <= window.lower && window.lower < window.upper)) {
    throw PreconditionError("invalid integration window");
  }
  const BaselineHazard& bh = fit.baseline(window.stratum);
  const std::size_t p = fit.p;
  const auto pi = static_cast<Idx>(p);

  KernelSet ks;
  ks.window = window;
  ks.n_stratum = bh.n_records;
  ks.n_total = fit.n_total;
  const double nj = static_cast<double>(bh.n_records);

  // Profile risks exp(beta'x_k).
  const std::size_t k_atoms = atoms.size();
  std::vector<double> risk(k_atoms, 0.0);
  if (p > 0) simd::linear_predictor(atoms.x, std::span<const double>(fit.beta.data(), p), risk);
  simd::exp_inplace(risk);

  // Carried-in stratum-1 hazard and its H term.
  double carry_l = 0.0;
  Vector carry_h = Vector::Zero(pi);
  if (window.carry_in) {
    const BaselineHazard& b1 = fit.baseline(1);
    const std::size_t end = first_after(b1, *window.carry_in);
    carry_l = end > 0 ? b1.cum[end - 1] : 0.0;
    carry_h = cumulative_h(b1, p, 0, end);
    for (std::size_t k = 0; k < end; ++k) ks.carry_index.push_back(k);
  }

  const std::size_t c_end = first_after(bh, window.condition);  // events <= condition
  const double l_cond = c_end > 0 ? bh.cum[c_end - 1] : 0.0;
  const std::size_t lo_end = first_after(bh, window.lower);
  const std::size_t hi_end =
      static_cast<std::size_t>(std::lower_bound(bh.event_times.begin(), bh.event_times.end(), window.upper) -
                               bh.event_times.begin());  // events < upper

  // Events in (condition, upper).
  for (std::size_t k = c_end; k < hi_end; ++k) {
    ks.event_index.push_back(k);
    ks.event_times.push_back(bh.event_times[k]);
    const double s0 = bh.risk_sum[k];
    ks.g0.push_back(s0 / nj);
    ks.dv.push_back(nj * bh.events[k] / (s0 * s0));
  }
  ks.empty_grid = ks.event_index.empty();
  ks.g1 = Matrix::Zero(static_cast<Idx>(ks.event_index.size()), pi);
  for (std::size_t e = 0; e < ks.event_index.size(); ++e) {
    if (p > 0) ks.g1.row(static_cast<Idx>(e)) = bh.risk_sum_x.row(static_cast<Idx>(ks.event_index[e])) / nj;
  }

  // Cells: left points {lower} U {events in (lower, upper)}.
  ks.left.push_back(window.lower);
  for (std::size_t k = lo_end; k < hi_end; ++k) ks.left.push_back(bh.event_times[k]);
  const std::size_t cells = ks.left.size();
  ks.width.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    ks.width[c] = (c + 1 < cells ? ks.left[c + 1] : window.upper) - ks.left[c];
  }
  ks.cumhaz.resize(cells);
  ks.survival.resize(cells);
  ks.gamma.resize(cells);
  ks.v.resize(cells);
  ks.phi = Matrix::Zero(static_cast<Idx>(cells), pi);
  ks.h = Matrix::Zero(static_cast<Idx>(cells), pi);

  // Running H and V from the conditioning time, advanced to each left point.
  Vector h_run = Vector::Zero(pi);
  double v_run = 0.0;
  std::size_t next = c_end;
  std::vector<double> phi(p);
  for (std::size_t c = 0; c < cells; ++c) {
    const double g = ks.left[c];
    for (; next < hi_end && bh.event_times[next] <= g; ++next) {
      const double s0 = bh.risk_sum[next];
      const double w = bh.events[next] / (s0 * s0);
      v_run += nj * w;
      if (p > 0) h_run += w * bh.risk_sum_x.row(static_cast<Idx>(next)).transpose();
    }
    const double l_here = next > 0 ? bh.cum[next - 1] : 0.0;
    const double lam = carry_l + std::max(0.0, l_here - l_cond);
    const simd::Moments mo = simd::profile_moments(risk, atoms.weight, atoms.x, lam, phi);
    ks.cumhaz[c] = lam;
    ks.survival[c] = mo.survival;
    ks.gamma[c] = mo.gamma;
    ks.v[c] = v_run;
    for (std::size_t d = 0; d < p; ++d) ks.phi(static_cast<Idx>(c), static_cast<Idx>(d)) = phi[d];
    if (p > 0) ks.h.row(static_cast<Idx>(c)) = (h_run + carry_h).transpose();
    ks.value += mo.survival * ks.width[c];
    ks.mass += mo.gamma * ks.width[c];
  }
  return ks;
}

namespace {

// Integrated Gamma mass on cells whose left point is >= u, for each segment event.
std::vector<double> event_loadings(const KernelSet& ks) {
  const std::size_t cells = ks.left.size();
  std::vector<double> suffix(cells + 1, 0.0);
  for (std::size_t c = cells; c-- > 0;) suffix[c] = suffix[c + 1] + ks.gamma[c] * ks.width[c];
  std::vector<double> out(ks.event_times.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto first = static_cast<std::size_t>(
        std::lower_bound(ks.left.begin(), ks.left.end(), ks.event_times[e]) - ks.left.begin());
    out[e] = suffix[first];
  }
  return out;
}

}  // namespace

double omega(const KernelSet& ks, Wedge wedge) {
  const std::vector<double> load = event_loadings(ks);
  double acc = 0.0;
  for (std::size_t e = 0; e < load.size(); ++e) {
    const double l = load[e];
    const double f = wedge == Wedge::Min ? l * l : ks.mass * ks.mass - (ks.mass - l) * (ks.mass - l);
    acc += ks.dv[e] * f;
  }
  return acc;
}

double omega_double_sum(const KernelSet& ks, Wedge wedge, bool swap) {
  const std::size_t cells = ks.left.size();
  double acc = 0.0;
  for (std::size_t a = 0; a < cells; ++a) {
    for (std::size_t b = 0; b < cells; ++b) {
      const std::size_t p = swap ? b : a;
      const std::size_t q = swap ? a : b;
      const std::size_t at = wedge == Wedge::Min ? std::min(p, q) : std::max(p, q);
      acc += ks.v[at] * ks.gamma[p] * ks.width[p] * ks.gamma[q] * ks.width[q];
    }
  }
  return acc;
}

Vector psi(const KernelSet& ks) {
  const auto p = ks.phi.cols();
  Vector out = Vector::Zero(p);
  for (std::size_t c = 0; c < ks.left.size(); ++c) {
    const auto ci = static_cast<Idx>(c);
    out += ks.width[c] * (ks.gamma[c] * ks.h.row(ci).transpose() - ks.cumhaz[c] * ks.phi.row(ci).transpose());
  }
  return out;
}

void Influence::add(const Influence& other, double scale) {
  for (const auto& [s, l] : other.loading) {
    auto& mine = loading[s];
    if (mine.size() < l.size()) mine.resize(l.size(), 0.0);
    for (std::size_t k = 0; k < l.size(); ++k) mine[k] += scale * l[k];
  }
  if (psi.size() == 0) psi = Vector::Zero(other.psi.size());
  if (other.psi.size() == psi.size()) psi += scale * other.psi;
}

Influence influence(const KernelSet& ks, const CoxFit& fit) {
  Influence inf;
  const int s = ks.window.stratum;
  auto& own = inf.loading[s];
  own.assign(fit.baseline(s).size(), 0.0);
  const std::vector<double> load = event_loadings(ks);
  for (std::size_t e = 0; e < load.size(); ++e) own[ks.event_index[e]] += load[e];
  if (!ks.carry_index.empty()) {
    auto& first = inf.loading[1];
    first.resize(fit.baseline(1).size(), 0.0);
    for (std::size_t k : ks.carry_index) first[k] += ks.mass;
  }
  inf.psi = psi(ks);
  return inf;
}

void Linearization::add(const Linearization& other, double weight, bool keep_kernels) {
  influence.add(other.influence, weight);
  for (auto seg : other.segments) {
    seg.weight *= weight;
    segments.push_back(seg);
  }
  if (keep_kernels) kernels.insert(kernels.end(), other.kernels.begin(), other.kernels.end());
}

Linearization linearize(const CoxFit& fit, std::vector<KernelSet> segments) {
  Linearization lin;
  lin.influence.psi = Vector::Zero(static_cast<Idx>(fit.p));
  for (const auto& ks : segments) {
    lin.influence.add(influence(ks, fit));
    lin.segments.push_back({1.0, ks.window.stratum, ks.n_stratum, omega(ks, Wedge::Min), omega(ks, Wedge::Max)});
  }
  lin.kernels = std::move(segments);
  return lin;
}

double covariance(const Influence& a, const Influence& b, const CoxFit& fit) {
  double acc = 0.0;
  for (const auto& [s, la] : a.loading) {
    auto it = b.loading.find(s);
    if (it == b.loading.end()) continue;
    const auto& lb = it->second;
    const BaselineHazard& bh = fit.baseline(s);
    const std::size_t m = std::min({la.size(), lb.size(), bh.size()});
    for (std::size_t k = 0; k < m; ++k) {
      if (la[k] == 0.0 || lb[k] == 0.0) continue;
      const double s0 = bh.risk_sum[k];
      acc += bh.events[k] / (s0 * s0) * la[k] * lb[k];
    }
  }
  if (fit.p > 0 && a.psi.size() == static_cast<Idx>(fit.p) && b.psi.size() == static_cast<Idx>(fit.p)) {
    acc += a.psi.dot(fit.info_inverse * b.psi);
  }
  return acc;
}

double covariance(const Linearization& a, const Linearization& b, const CoxFit& fit) {
  return covariance(a.influence, b.influence, fit);
}

VarianceReport variance(const Linearization& lin, const CoxFit& fit, const VarianceOptions& opts) {
  VarianceReport rep;
  const double total = covariance(lin.influence, lin.influence, fit);
  if (fit.p > 0 && lin.influence.psi.size() == static_cast<Idx>(fit.p)) {
    rep.beta = lin.influence.psi.dot(fit.info_inverse * lin.influence.psi);
  }
  rep.martingale = total - rep.beta;
  if (opts.wedge == Wedge::Max) {
    for (const auto& seg : lin.segments) {
      if (seg.n_stratum == 0) continue;
      rep.martingale += seg.weight * seg.weight * (seg.omega_max - seg.omega_min) / static_cast<double>(seg.n_stratum);
    }
  }
  rep.martingale = std::max(rep.martingale, 0.0);
  rep.variance = rep.martingale + rep.beta;
  return rep;
}

VarianceReport var_rmst_strt(const KernelSet& ks, const CoxFit& fit, const VarianceOptions& opts) {
  return variance(linearize(fit, {ks}), fit, opts);
}

double cov_strt(const KernelSet& k1, const KernelSet& kj, const CoxFit& fit) {
  if (fit.p == 0) return 0.0;
  const Vector a = psi(k1);
  const Vector b = psi(kj);
  return a.dot(fit.info_inverse * b);
}

VarianceReport var_rmst_dly(const KernelSet* head, const KernelSet& tail, const CoxFit& fit,
                            const VarianceOptions& opts) {
  std::vector<KernelSet> segs;
  if (head) segs.push_back(*head);
  segs.push_back(tail);
  return variance(linearize(fit, std::move(segs)), fit, opts);
}

double cov_dly_pair(const Linearization& at_l, const Linearization& at_h, const CoxFit& fit) {
  return covariance(at_l, at_h, fit);
}

VarianceReport var_rmst_dst(std::span<const Linearization> per_delay, std::span<const double> weights,
                            const CoxFit& fit, const VarianceOptions& opts) {
  if (per_delay.size() != weights.size() || per_delay.empty()) {
    throw PreconditionError("var_rmst_dst: one weight per delay atom is required");
  }
  Linearization all;
  all.influence.psi = Vector::Zero(static_cast<Idx>(fit.p));
  for (std::size_t l = 0; l < per_delay.size(); ++l) all.add(per_delay[l], weights[l], false);
  return variance(all, fit, opts);
}

}  // namespace rmstcea
