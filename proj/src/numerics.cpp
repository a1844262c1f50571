#include "pseudoknockoff/numerics.hpp"

#include <cmath>
#include <string>

#include "pseudoknockoff/rng.hpp"

namespace pkf {

namespace {

void require_finite(const SymMatrix& m, const char* op) {
  if (!m.all_finite())
    throw std::invalid_argument(std::string(op) + ": non-finite entry");
}

}  // namespace

EigResult eig_sym(const SymMatrix& m) {
  require_finite(m, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_dense());
  if (es.info() != Eigen::Success)
    throw FactorizationError("eig_sym: iteration failed to converge");
  const int n = m.order();
  EigResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  // Eigen returns ascending order; the contract here is descending.
  for (int i = 0; i < n; ++i) {
    r.values(i) = es.eigenvalues()(n - 1 - i);
    r.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return r;
}

Eigen::MatrixXd chol_psd(const SymMatrix& m, double tol) {
  require_finite(m, "chol_psd");
  const int n = m.order();
  Eigen::MatrixXd dense = m.to_dense();
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    return l;
  }
  // Semidefinite or slightly indefinite input: clip small negative
  // eigenvalues, then re-triangularize the square root via QR so callers
  // always get a lower-triangular factor.
  EigResult eig = eig_sym(m);
  double lmax = std::max(0.0, eig.values(0));
  double floor = -tol * std::max(lmax, 1e-300);
  for (int i = 0; i < n; ++i) {
    if (eig.values(i) < floor)
      throw FactorizationError("chol_psd: eigenvalue " +
                               std::to_string(eig.values(i)) +
                               " below PSD tolerance " + std::to_string(floor));
  }
  Eigen::VectorXd sq = eig.values.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd a = eig.vectors * sq.asDiagonal();  // m = a a^T
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a.transpose());
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  Eigen::MatrixXd l = r.transpose();
  // Fix column signs so diagonals are nonnegative (QR sign ambiguity).
  for (int j = 0; j < n; ++j)
    if (l(j, j) < 0.0) l.col(j) = -l.col(j);
  return l;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const SymMatrix& m, const char* op) {
  require_finite(m, op);
  Eigen::MatrixXd dense = m.to_dense();
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success)
    throw FactorizationError(std::string(op) +
                             ": matrix not positive definite");
  // LLT can "succeed" on nearly singular input; reject pivots that fall
  // below a relative threshold of the largest one.
  Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  double dmax = diag.maxCoeff();
  if (dmax <= 0.0 || diag.minCoeff() <= 1e-12 * dmax)
    throw FactorizationError(std::string(op) +
                             ": matrix singular within tolerance");
  return llt;
}

}  // namespace

Eigen::VectorXd solve_spd(const SymMatrix& m, const Eigen::VectorXd& rhs) {
  if (rhs.size() != m.order())
    throw std::invalid_argument("solve_spd: rhs size mismatch");
  return spd_factor(m, "solve_spd").solve(rhs);
}

Eigen::MatrixXd solve_spd(const SymMatrix& m, const Eigen::MatrixXd& rhs) {
  if (rhs.rows() != m.order())
    throw std::invalid_argument("solve_spd: rhs size mismatch");
  return spd_factor(m, "solve_spd").solve(rhs);
}

SymMatrix inverse_spd(const SymMatrix& m) {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m.order(), m.order());
  Eigen::MatrixXd inv = solve_spd(m, eye);
  return SymMatrix::from_dense(inv);
}

SvdThin svd_thin(const Eigen::MatrixXd& a) {
  if (a.rows() < a.cols())
    throw std::invalid_argument("svd_thin: requires rows >= cols");
  if (!a.allFinite())
    throw std::invalid_argument("svd_thin: non-finite entry");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a,
                                     Eigen::ComputeThinU | Eigen::ComputeFullV);
  SvdThin r;
  r.u = svd.matrixU();
  r.d = svd.singularValues();
  r.v = svd.matrixV();
  return r;
}

Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& a, int k,
                                       std::uint64_t seed) {
  const int n = int(a.rows());
  if (k < 0) throw std::invalid_argument("orthonormal_complement: k < 0");
  if (!a.allFinite())
    throw std::invalid_argument("orthonormal_complement: non-finite entry");

  // Orthonormal basis of range(a) via column-pivoted QR (rank revealing).
  Eigen::MatrixXd basis(n, 0);
  int rank = 0;
  if (a.cols() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    rank = int(qr.rank());
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, rank);
    basis = q;
  }
  if (rank + k > n)
    throw std::invalid_argument(
        "orthonormal_complement: k too large for ambient dimension (rank " +
        std::to_string(rank) + " + k " + std::to_string(k) + " > n " +
        std::to_string(n) + ")");

  Eigen::MatrixXd w(n, k);
  CounterRng rng(hash_combine(seed, 0x6f7274686fULL));  // op-local stream
  int built = 0;
  int attempts = 0;
  while (built < k) {
    if (++attempts > 100 * (k + 1))
      throw FactorizationError(
          "orthonormal_complement: repeated near-collinear redraws");
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.next_gaussian();
    Eigen::VectorXd v = g;
    v -= basis * (basis.transpose() * g);
    if (built > 0) {
      auto wb = w.leftCols(built);
      v -= wb * (wb.transpose() * v);
      // Second pass tames rounding when n is large.
      v -= basis * (basis.transpose() * v);
      v -= wb * (wb.transpose() * v);
    } else {
      v -= basis * (basis.transpose() * v);
    }
    double norm = v.norm();
    if (norm < 1e-8 * std::max(1.0, g.norm())) continue;  // redraw
    w.col(built++) = v / norm;
  }
  return w;
}

double min_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_dense(),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.to_dense(),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace pkf
