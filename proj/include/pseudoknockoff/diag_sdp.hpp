#pragma once

#include <Eigen/Dense>

#include "pseudoknockoff/sym_matrix.hpp"

namespace pkf {

struct DiagSdpOptions {
  double tol_rel = 1e-8;    // PSD slack relative to max|a|
  double tol_resid = 1e-7;  // splitting stops when scaled residuals fall here
  int max_iter = 5000;
};

struct DiagSdpResult {
  Eigen::VectorXd x;
  double min_eig = 0.0;  // of a - diag(x) at the returned point
  int iterations = 0;
  bool converged = false;
};

/// maximize sum(x) subject to diag(x) <= a in the PSD order and
/// lo <= x <= hi, by operator splitting: alternate a PSD projection of
/// a - diag(x) (one eigendecomposition per pass) with the closed-form
/// box-clipped diagonal update, then shift the iterate down until it is
/// strictly PSD-feasible.  Requires x = lo to be PSD-feasible.  Always
/// returns a PSD-feasible point no worse than the feasible start x0;
/// converged means the splitting residuals met tol_resid, so the point is
/// optimal up to that scale.
DiagSdpResult max_diag_under(const SymMatrix& a, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi,
                             const Eigen::VectorXd& x0,
                             const DiagSdpOptions& opts = {});

struct DiagMajorizerResult {
  Eigen::VectorXd d;
  double min_eig = 0.0;  // of diag(d) - m
  bool converged = false;
};

/// minimize trace(diag(d)) subject to diag(d) >= m (PSD) and d >= floor,
/// elementwise.  Never worse than the Gershgorin point
/// d_i = max(floor, m_ii + sum_{j != i} |m_ij|).
DiagMajorizerResult solve_diag_majorizer(const SymMatrix& m,
                                         double floor_value,
                                         const DiagSdpOptions& opts = {});

/// Knockoff Gram-gap vector: maximize sum(s) subject to 0 <= s <= 1 and
/// diag(s) <= 2 sigma - margin I.  The margin keeps the realized
/// augmented design strictly full rank.
Eigen::VectorXd knockoff_sdp_s(const SymMatrix& sigma, double margin = 1e-6,
                               const DiagSdpOptions& opts = {});

}  // namespace pkf
