#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoknockoff/rng.hpp"

namespace pkf {

// ---------------------------------------------------------------------------
// Certified bound on E[ sup_i V_i^+ / (V_i^- + m) ].
//
// V_i^+ / V_i^- count positive / negative signs among the i
// largest-magnitude null statistics.  The signs are symmetric, independent
// within each of m groups, and arbitrarily coupled across groups.  Every
// quantity below is uniform in m: indices enter only through the rescaled
// position i/m, so one numeric certificate covers all group structures.
// ---------------------------------------------------------------------------

/// log of the Chernoff slice bound
///   exp(-xi ((t x - y)/2 + s)) cosh((1+t) xi/2)^x cosh(xi/2)^(y-x),
/// an upper bound on P(V_{ym}^+ > t V_{xm}^- + s m) for x <= y, t > 1.
/// Computed in log space so wide slices cannot overflow; decreasing in x
/// and s, increasing in y.
double log_slice_bound(double x, double y, double t, double xi, double s);

/// exp(log_slice_bound); +inf when the value exceeds the double range.
double slice_bound(double x, double y, double t, double xi, double s);

/// Minimizer of the Gaussian relaxation of the slice bound,
///   xi* = (2 (t x - y) + 4 s) / (y - x + (1+t)^2 x),
/// used to center the xi search grid.  Throws std::invalid_argument when
/// the denominator is not positive.
double xi_star(double x, double y, double t, double s);

/// Exact minimum of slice_bound over the grid
///   { xi*/3 + step*k } intersected with [xi*/3, 3 xi*].
/// log_slice_bound is convex in xi, so the grid restriction is unimodal;
/// the minimum is located through the continuous stationary point instead
/// of a full scan, but equals the scan result exactly.
double min_slice_bound_on_grid(double x, double y, double t, double s,
                               double step = 0.01);

/// Sub-Gaussian tail  P(V_i^+ / (V_i^- + m) > t)
///   <= exp(-((t-1) i + 2 t m)^2 / (2 (1+t))^2 * 2 / (m i)),  t > 1.
double hoeffding_tail(double i, double m, double t);

struct BoundPlan {
  double t_min = 2.4;    // thresholds below are charged in full to E[sup]
  double t_max = 15.0;   // grid end; beyond it a closed-form tail takes over
  double t_step = 0.005;
  double regime_split = 4.0;  // below: symmetric-prefix discard, shift t^2
  double slice_stop = 150.0;  // first slice endpoint beyond it ends slicing
  double tail_xi = 0.2;       // geometric remainder rate on the grid range
  double large_t_xi = 0.5;    // rate for the closed-form tail past t_max
  int n_candidates = 19;      // greedy step candidates s_k + i h, h=(t-1)s_k/20
  int lookahead_slices = 30;  // arithmetic sub-slices scored per candidate
  double xi_grid_step = 0.01;
  int n_threads = 0;  // 0 = hardware concurrency
};

/// One threshold's certified tail bound P(sup_i V_i^+/(V_i^- + m) > t).
struct ThresholdBound {
  double t = 0.0;
  double base = 0.0;       // 1/2 symmetric-discard mass below regime_split
  double slice_sum = 0.0;  // greedy slices covering positions up to ~150
  double tail = 0.0;       // geometric remainder beyond the last slice
  double bound = 0.0;      // min(1, base + slice_sum + tail)
  int n_slices = 0;
  double last_s = 0.0;  // first slice endpoint beyond slice_stop
};

struct BoundCertificate {
  std::vector<ThresholdBound> points;  // ascending t over the grid
  std::vector<double> envelope;        // running min of bounds; non-increasing
  double grid_integral = 0.0;        // right-endpoint Riemann sum (headline)
  double grid_integral_upper = 0.0;  // left-endpoint sum: one-sided upper
  double large_t_integral = 0.0;     // closed-form remainder past t_max
  double tail_ratio_grid = 0.0;      // geometric ratio at t_min (grid max)
  double tail_ratio_large = 0.0;     // ratio at t_max for the remainder
  double constant = 0.0;        // t_min + grid_integral + large_t_integral
  double constant_upper = 0.0;  // same with grid_integral_upper
  std::string notes;
};

/// Tail bound at a single threshold.  For t <= t_max: greedy slicing plus
/// the geometric remainder (plus the 1/2 discard term below regime_split).
/// For t > t_max: unit-width slices in closed form,
///   (e^xi + 1)/2 * e^{-xi t} * r^t / (1 - r),  r = (e^xi + e^{-t xi})/2.
/// Throws std::runtime_error if the geometric ratio reaches 1.
ThresholdBound bound_at_t(double t, const BoundPlan& plan = {});

/// Full certificate: per-threshold bounds on the t grid, their running-min
/// envelope, and E[sup] <= t_min + integral of the envelope + remainder.
/// The headline `constant` charges each grid cell the envelope value at its
/// right endpoint; for a non-increasing envelope that undershoots the
/// integral by at most t_step * (envelope front - envelope back), so the
/// certificate also carries `constant_upper`, the left-endpoint sum, which
/// is a one-sided upper bound with no such slack.
BoundCertificate sup_bound_pipeline(const BoundPlan& plan = {});

// ---------------------------------------------------------------------------
// Monte Carlo verifiers for the sign-process assumptions and bounds.
// ---------------------------------------------------------------------------

enum class SignCoupling {
  independent,  // every sign independent
  copies        // groups are identical copies of one group's draw
};

/// Null-sign process: symmetric +-1 signs attached to magnitude-ordered
/// null statistics, independent within each group, coupled across groups
/// per SignCoupling.  p_positive must be exactly one half -- the verifiers
/// rely on sign symmetry, and an asymmetric model is only useful as a
/// deliberately failing control, which the constructor rejects.
struct NullSignModel {
  NullSignModel(std::vector<int> sizes, SignCoupling coupling,
                double p_positive = 0.5);

  std::vector<int> group_sizes;
  SignCoupling coupling = SignCoupling::independent;

  int m() const { return static_cast<int>(group_sizes.size()); }
  int total() const;

  /// Signs in global decreasing-magnitude order.  Independent coupling:
  /// magnitudes are exchangeable and independent of the signs, so the
  /// ordered sequence is i.i.d.  Copies coupling: the m copies of one
  /// underlying draw tie in magnitude and sit adjacently, so each
  /// underlying sign repeats m times.
  void sample_signs(CounterRng& rng, std::vector<std::int8_t>& out) const;
};

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;  // standard error of the mean
  std::int64_t trials = 0;
};

/// E[ V^+ / (V^- + m) ] with V^+/V^- counting all positive/negative signs
/// (a fixed threshold keeping every coordinate).  Single group of size n
/// has the closed form 1 - 2^{-n}.
McEstimate mc_fixed_t_expectation(const NullSignModel& model,
                                  std::int64_t trials, std::uint64_t seed,
                                  int n_threads = 0);

/// E[ sup_{i >= 1} V_i^+ / (V_i^- + m) ] over all prefixes of the
/// magnitude order.
McEstimate mc_sup_ratio(const NullSignModel& model, std::int64_t trials,
                        std::uint64_t seed, int n_threads = 0);

/// E[ exp(theta (V_j^+ + t V_i^+ - (j + t i)/2)) ] estimated by simulation;
/// compare against mgf_product_bound.  Requires 1 <= i <= j <= total.
McEstimate mc_mgf(const NullSignModel& model, double t, double theta, int i,
                  int j, std::int64_t trials, std::uint64_t seed,
                  int n_threads = 0);

/// Independence-decoupled bound on the same moment generating function:
///   cosh((1+t) m theta / 2)^(i/m) * cosh(m theta / 2)^((j-i)/m).
/// Exact (an equality) when the coupling is `copies` and i, j are
/// multiples of m, or when m = 1.
double mgf_product_bound(double t, double theta, int i, int j, int m);

/// P(Z_1 > 0, Z_2 > 0) for standard bivariate normal with correlation mu:
///   1/4 + arcsin(mu) / (2 pi).  Requires |mu| <= 1.
double orthant_prob(double mu);

/// Max violation of the sign-covariance bound
///   arcsin(mu)/(2 pi) * w_i w_j <= mu/(2 pi) * w_i w_j + quad_coeff * mu^2
/// over the given mu grid and all four sign pairs (w_i, w_j).  Returns the
/// largest positive excess (0 when the bound holds everywhere).  The
/// default quad_coeff 3/2 is the certified constant; smaller values let
/// tests confirm the checker actually detects violations.
double lemma_cov_bound_check(const std::vector<double>& mu_grid,
                             double quad_coeff = 1.5);

struct OrtExceedanceCell {
  double delta = 0.0;
  int j = 0;
  double freq = 0.0;    // empirical P(V_j^+ / V_j^- >= (1+delta)/(1-delta))
  double se = 0.0;      // binomial standard error of freq
  double bound = 0.0;   // (1 + 3 pi) lambda_max / (pi delta^2 j)
  double lambda_max = 0.0;
  bool pass = false;    // freq <= bound + 3 se
};

struct OrtBoundReport {
  std::vector<OrtExceedanceCell> cells;  // j-major, delta-minor order
  std::vector<double> var_vplus;         // sample Var(V_j^+) per j
  std::vector<double> var_cap;           // 2 (1/(2 pi) + 3/2) j per j
  bool lambda_below_j = true;  // trace bound on every realized submatrix
  bool var_within_cap = true;  // variance refinement, with sampling slack
  bool pass = true;            // all cells pass and lambda_below_j
};

/// Conditional exceedance check for an orthogonal companion (x^T xt = 0).
/// One response fixes the coefficient-sum eta, hence the magnitude order
/// and the reference signs; fresh coefficient-difference draws
/// xi ~ N(0, b) then give the exceedance frequency of the top-j sign
/// counts, compared to the spectral bound computed from the realized
/// standardized top-j precision submatrix.
OrtBoundReport thm_ort_bound_check(const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& xt,
                                   const Eigen::VectorXd& y,
                                   std::int64_t trials,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<int>& j_grid,
                                   std::uint64_t seed, int n_threads = 0);

}  // namespace pkf
