#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/diag_sdp.hpp"
#include "pseudoknockoff/sym_matrix.hpp"

namespace pkf {

enum class Method {
  orthogonal,      // x^T xt = 0
  block_diagonal,  // group-diagonal Gram gap
  general,         // interleaved-class diagonal majorizer
  knockoff_equi,   // classical knockoff, equicorrelated s
  knockoff_sdp     // classical knockoff, SDP s
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);

/// A realized companion design.  The defining identities are
///   xt^T xt = x^T x,  (x + xt)^T (x - xt) = 0,
///   (x - xt)^T (x - xt) = 4 b^{-1},
/// where b is the variance proxy of the coefficient-difference estimator.
struct PseudoKnockoff {
  Eigen::MatrixXd xt;
  SymMatrix b;
  Method method = Method::orthogonal;
  std::vector<std::vector<int>> partition;  // groups or classes, 0-based
  double gamma = 0.0;                       // scaling actually applied
  Eigen::VectorXd s;                        // knockoff kinds only
};

struct ConstructOptions {
  int group_size = 5;          // block_diagonal partition width
  int m = 2;                   // number of interleaved classes (general)
  double general_gamma = 1.2;  // precision inflation for the general kind
  double sdp_floor = 2.0;      // per-coordinate floor in the class majorizer
  std::vector<std::vector<int>> custom_partition;  // optional override
  std::uint64_t seed = 0;      // stream for the orthonormal complement
};

/// Realize xt = x (I - 2 sigma^{-1} b^{-1}) + 2 u c b^{-1} where
/// c^T c = b - sigma^{-1} and u is an orthonormal complement of x.
/// Requires b >= sigma^{-1} (PSD) and rows(x) >= 2 cols(x).
Eigen::MatrixXd build_xtilde_from_b(const Eigen::MatrixXd& x,
                                    const SymMatrix& sigma, const SymMatrix& b,
                                    std::uint64_t seed = 0);

/// xt with columns orthogonal to the design: b = 2 sigma^{-1}.
PseudoKnockoff construct_orthogonal(const Eigen::MatrixXd& x,
                                    const SymMatrix& sigma,
                                    std::uint64_t seed = 0);

/// Shared within-group scaling gamma = min(1, 2 lambda_min(D Sigma D)) / 1.2
/// where D is the blockwise inverse square root of the group diagonal.
double block_gamma(const SymMatrix& sigma,
                   const std::vector<std::vector<int>>& groups);

/// Gram gap equal to gamma * Sigma_{G,G} on each group block:
/// b = 2 diag(S_gg^{-1}).
PseudoKnockoff construct_block_diagonal(const Eigen::MatrixXd& x,
                                        const SymMatrix& sigma,
                                        const ConstructOptions& opts = {});

/// Interleaved classes C_k = {k, k+m, k+2m, ...}; each within-class block of
/// b is a diagonal majorizer of gamma (sigma^{-1})_{C,C} with entries >= the
/// floor, off-class blocks are gamma sigma^{-1}.  m = 1 degenerates to a
/// classical knockoff (diagonal Gram gap).
PseudoKnockoff construct_general(const Eigen::MatrixXd& x,
                                 const SymMatrix& sigma,
                                 const ConstructOptions& opts = {});

/// Classical knockoff baselines: x^T xt = sigma - diag(s) with s from the
/// equicorrelated rule or the SDP, realized through the same factorization
/// with b = 2 diag(s)^{-1}.
PseudoKnockoff construct_knockoff_baseline(const Eigen::MatrixXd& x,
                                           const SymMatrix& sigma,
                                           bool sdp_mode,
                                           std::uint64_t seed = 0);

/// Dispatch on method; uses design.sigma_hat.
PseudoKnockoff construct_method(Method method, const DesignEnsemble& design,
                                const ConstructOptions& opts = {});

struct ValidationReport {
  double gram_match = 0.0;       // ||xt^T xt - sigma||_max
  double cross_orth = 0.0;       // ||(x+xt)^T (x-xt)||_max
  double var_identity = 0.0;     // rel. error of (x-xt)^T(x-xt) vs 4 b^{-1}
  double method_identity = 0.0;  // method-specific residual (see below)
  double tol = 0.0;              // absolute threshold actually applied
  bool pass = false;
  std::string detail;
};

/// Checks the defining identities plus one method-specific identity:
/// orthogonal: x^T xt = 0; block_diagonal: sigma - x^T xt equals the
/// group-diagonal gap; general: b dominates gamma sigma^{-1} and is
/// diagonal within classes; knockoffs: x^T xt = sigma - diag(s).
ValidationReport validate_construction(const Eigen::MatrixXd& x,
                                       const PseudoKnockoff& pk,
                                       const SymMatrix& sigma,
                                       double tol_rel = 1e-8);

}  // namespace pkf
