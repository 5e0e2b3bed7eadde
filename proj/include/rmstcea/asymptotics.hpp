#pragma once

// Asymptotic variance machinery for profile-averaged RMSTs under a stratified Cox fit.
//
// An RMST estimate is built from one or more integration windows ("segments"). Each
// segment integrates the profile-averaged survival
//
//   S~(t|x) = exp{-exp(b'x) [L_carry + L_s(t) - L_s(c)]},   t in [lower, upper),
//
// where s is the segment stratum, c its conditioning time and L_carry the stratum-1
// hazard accrued before a treatment switch (DLY tails). The quadrature grid is
// {lower} U {stratum events in (lower, upper)} U {upper}; all kernels are evaluated at
// the left end of each cell, so the point estimate and its variance share one grid.
//
// The delta method linearizes every estimate as
//
//   mu_hat - mu ~ -sum_s sum_u dM_s(u)/S0_s(u) * L_s(u) + psi' (beta_hat - beta),
//
// with per-stratum loadings L_s(u) (integrated Gamma mass that depends on the hazard
// increment at u) and a coefficient gradient psi. Covariances of any two estimates then
// follow from sum_s sum_u d_u/S0(u)^2 L^A L^B + psi_A' I^{-1} psi_B.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rmstcea/cox.hpp"
#include "rmstcea/data_model.hpp"

namespace rmstcea {

/// Covariate atoms with identical vectors merged; x is column-major (p columns of K).
struct AtomTable {
  std::size_t p = 0;
  std::vector<double> weight;
  std::vector<double> x;

  std::size_t size() const { return weight.size(); }
  std::vector<double> atom(std::size_t k) const;
};

AtomTable compress_atoms(std::span<const ProfileAtom> atoms, std::size_t p);

struct Window {
  int stratum = 1;
  double lower = 0.0;
  double upper = 0.0;
  double condition = 0.0;           // hazard accrues from here; condition <= lower
  std::optional<double> carry_in;   // add stratum-1 hazard on (0, carry_in]
};

/// Intermediate arrays for one segment. `v`, `g0`, `g1` follow the per-stratum
/// normalization by n_j (V = n_j^-1 sum 1/G0^2 with G0 = S0/n_j).
struct KernelSet {
  Window window;
  std::size_t n_stratum = 0;
  std::size_t n_total = 0;

  // Quadrature cells [left_k, left_k + width_k).
  std::vector<double> left;
  std::vector<double> width;
  std::vector<double> cumhaz;    // effective cumulative hazard at left_k
  std::vector<double> survival;  // profile-averaged survival at left_k
  std::vector<double> gamma;     // profile-averaged exp(b'x) S~
  Matrix phi;                    // cells x p: profile-averaged x exp(b'x) S~
  Matrix h;                      // cells x p: H terms (incl. carried-in stratum-1 part)
  std::vector<double> v;         // V at left_k

  // Stratum events in (condition, upper).
  std::vector<std::size_t> event_index;  // into BaselineHazard arrays
  std::vector<double> event_times;
  std::vector<double> g0;
  Matrix g1;                             // events x p
  std::vector<double> dv;                // V increments

  // Stratum-1 events in (0, carry_in] when a switch is carried in.
  std::vector<std::size_t> carry_index;

  double value = 0.0;  // sum survival * width
  double mass = 0.0;   // sum gamma * width
  bool empty_grid = true;
};

KernelSet build_kernels(const CoxFit& fit, const AtomTable& atoms, const Window& window);

/// How V is evaluated at a pair of grid points inside Omega double sums.
/// Min gives the covariance of the Breslow martingale; Max is the alternative reading.
enum class Wedge { Min, Max };

struct VarianceOptions {
  Wedge wedge = Wedge::Min;
};

/// sum_p sum_q V(t_p (wedge) t_q) Gamma_p Gamma_q D_p D_q over the segment grid.
double omega(const KernelSet& ks, Wedge wedge = Wedge::Min);
/// O(m^2) evaluation of the same double sum; `swap` iterates q in the outer loop.
double omega_double_sum(const KernelSet& ks, Wedge wedge = Wedge::Min, bool swap = false);
/// sum_p [Gamma_p H_p - Lambda_p Phi_p] D_p.
Vector psi(const KernelSet& ks);

/// Linear representation of an estimate (see file comment).
struct Influence {
  std::map<int, std::vector<double>> loading;  // aligned with BaselineHazard::event_times
  Vector psi;

  void add(const Influence& other, double scale = 1.0);
};

Influence influence(const KernelSet& ks, const CoxFit& fit);

/// Per-segment pieces needed to apply the Wedge option after aggregation.
struct SegmentSummary {
  double weight = 1.0;
  int stratum = 1;
  std::size_t n_stratum = 0;
  double omega_min = 0.0;
  double omega_max = 0.0;
};

/// Aggregated linearization of an estimate plus optional cached kernels.
struct Linearization {
  Influence influence;
  std::vector<SegmentSummary> segments;
  std::vector<KernelSet> kernels;  // cache; may be empty for large delay mixtures

  void add(const Linearization& other, double weight, bool keep_kernels);
};

Linearization linearize(const CoxFit& fit, std::vector<KernelSet> segments);

struct VarianceReport {
  double variance = 0.0;
  double martingale = 0.0;  // n_j^-1 Omega terms
  double beta = 0.0;        // n^-1 Psi' Sigma^-1 Psi
};

/// Covariance of two linearized estimates (martingale + coefficient parts).
double covariance(const Influence& a, const Influence& b, const CoxFit& fit);
double covariance(const Linearization& a, const Linearization& b, const CoxFit& fit);
VarianceReport variance(const Linearization& lin, const CoxFit& fit, const VarianceOptions& opts = {});

/// n_j^-1 Omega_j^(r) + n^-1 Psi' Sigma^-1 Psi for a single conditional window.
VarianceReport var_rmst_strt(const KernelSet& ks, const CoxFit& fit, const VarianceOptions& opts = {});
/// Coefficient-only covariance n^-1 Psi_1' Sigma^-1 Psi_j of two strata.
double cov_strt(const KernelSet& k1, const KernelSet& kj, const CoxFit& fit);
/// Head on stratum 1 over [0, a) plus switched tail over [a, eta). `head` is empty
/// when a == 0; for stratum 1 pass the full window as `tail` and no head.
VarianceReport var_rmst_dly(const KernelSet* head, const KernelSet& tail, const CoxFit& fit,
                            const VarianceOptions& opts = {});
/// Covariance between the fixed-delay estimates at two delays.
double cov_dly_pair(const Linearization& at_l, const Linearization& at_h, const CoxFit& fit);
/// Variance of sum_l w_l mu(delta_l) as sum_l w_l^2 Var_l + sum_{l != h} w_l w_h Cov_lh.
VarianceReport var_rmst_dst(std::span<const Linearization> per_delay, std::span<const double> weights,
                            const CoxFit& fit, const VarianceOptions& opts = {});

}  // namespace rmstcea
