#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "pseudoknockoff/sym_matrix.hpp"

namespace pkf {

/// Thrown when a factorization's input violates its numerical contract
/// (not PSD, singular, rank-deficient).  The message names the offending
/// quantity.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // vectors.col(i) pairs with values(i)
};

/// Full symmetric eigendecomposition, eigenvalues in descending order.
EigResult eig_sym(const SymMatrix& m);

/// Lower-triangular L with L L^T = m for PSD m.  Eigenvalues in
/// [-tol * lambda_max, 0) are clipped to zero through an eigendecomposition
/// fallback; anything below that raises FactorizationError.  `tol` is
/// relative to lambda_max.
Eigen::MatrixXd chol_psd(const SymMatrix& m, double tol = 1e-10);

/// Solve m x = rhs for SPD m.  Throws FactorizationError when m is singular
/// or indefinite within roughly 1e-12 relative tolerance.
Eigen::VectorXd solve_spd(const SymMatrix& m, const Eigen::VectorXd& rhs);
Eigen::MatrixXd solve_spd(const SymMatrix& m, const Eigen::MatrixXd& rhs);

/// Symmetric inverse: solve m X = I, repacked symmetric.
SymMatrix inverse_spd(const SymMatrix& m);

struct SvdThin {
  Eigen::MatrixXd u;  // n x p, orthonormal columns
  Eigen::VectorXd d;  // descending, nonnegative
  Eigen::MatrixXd v;  // p x p orthogonal
};

/// Thin SVD a = u diag(d) v^T for n >= p.
SvdThin svd_thin(const Eigen::MatrixXd& a);

/// k orthonormal columns spanning a subspace of the orthogonal complement
/// of range(a): random Gaussian columns (seeded) orthogonalized against a
/// and each other, redrawing on near-collinearity.  Requires
/// rank(a) + k <= rows(a).
Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& a, int k,
                                       std::uint64_t seed = 0);

/// Smallest eigenvalue of a symmetric matrix (no vectors).
double min_eigenvalue(const SymMatrix& m);
double max_eigenvalue(const SymMatrix& m);

}  // namespace pkf
