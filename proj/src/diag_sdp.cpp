#include "pseudoknockoff/diag_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pseudoknockoff/numerics.hpp"

namespace pkf {

namespace {

std::pair<double, Eigen::VectorXd> min_eig_pair(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

/// Push x down until a - diag(x) is PSD (within tol), never below lo.
/// Shifting by the eigenvalue deficit alone is not enough: flooring a
/// coordinate at lo shrinks the shift there, so iterate.  lo itself is
/// feasible by precondition, hence the fallback.
Eigen::VectorXd repair_down(const Eigen::MatrixXd& a, Eigen::VectorXd x,
                            const Eigen::VectorXd& lo, double tol) {
  for (int pass = 0; pass < 64; ++pass) {
    auto [lmin, v] = min_eig_pair(a - Eigen::MatrixXd(x.asDiagonal()));
    if (lmin >= -tol) return x;
    x = (x.array() + lmin).matrix().cwiseMax(lo);
  }
  return lo;
}

}  // namespace

DiagSdpResult max_diag_under(const SymMatrix& a, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi,
                             const Eigen::VectorXd& x0,
                             const DiagSdpOptions& opts) {
  const int n = a.order();
  if (lo.size() != n || hi.size() != n || x0.size() != n)
    throw std::invalid_argument("max_diag_under: bound size mismatch");
  const Eigen::MatrixXd dense = a.to_dense();
  const double scale = std::max(1.0, a.max_abs());
  const double tol_psd = opts.tol_rel * scale;

  // x = lo must be PSD-feasible: it anchors every repair.
  {
    auto [lmin, v] = min_eig_pair(dense - Eigen::MatrixXd(lo.asDiagonal()));
    if (lmin < -tol_psd)
      throw std::invalid_argument(
          "max_diag_under: lower bound point infeasible (min eig " +
          std::to_string(lmin) + ")");
  }

  const Eigen::VectorXd start =
      repair_down(dense, x0.cwiseMax(lo).cwiseMin(hi), lo, tol_psd);

  // Splitting on z = a - diag(x):  maximize sum(x) over the box while z
  // stays in the PSD cone; u is the scaled dual of the coupling.
  Eigen::VectorXd x = start;
  Eigen::MatrixXd z = dense - Eigen::MatrixXd(x.asDiagonal());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
  double rho = 1.0;
  bool converged = false;
  int iter = 0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (; iter < opts.max_iter; ++iter) {
    // z-update: PSD projection of the current coupling target.
    es.compute(dense - Eigen::MatrixXd(x.asDiagonal()) - u);
    z = es.eigenvectors() *
        es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().transpose();

    // x-update: separable in the diagonal, closed form under the box.
    const Eigen::VectorXd x_prev = x;
    for (int i = 0; i < n; ++i) {
      x(i) = std::clamp(dense(i, i) - z(i, i) - u(i, i) + 1.0 / rho, lo(i),
                        hi(i));
    }

    // Scaled-dual update against the exact coupling z = a - diag(x).
    Eigen::MatrixXd gap = z - dense;
    gap.diagonal() += x;
    u += gap;

    const double primal = gap.norm();
    const double dual = rho * (x - x_prev).norm();
    const double eps = opts.tol_resid * scale * n;
    if (primal <= eps && dual <= eps) {
      converged = true;
      ++iter;
      break;
    }
    // Residual balancing keeps both residuals falling at one rate.
    if (primal > 10.0 * dual) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual > 10.0 * primal) {
      rho /= 2.0;
      u *= 2.0;
    }
  }

  // The splitting iterate can sit a residual-width outside the cone; the
  // shift repair makes it exactly feasible at a matching objective cost.
  Eigen::VectorXd repaired = repair_down(dense, x, lo, tol_psd);
  if (repaired.sum() < start.sum()) repaired = start;

  auto [lmin, v] = min_eig_pair(dense - Eigen::MatrixXd(repaired.asDiagonal()));
  return {repaired, lmin, iter, converged};
}

DiagMajorizerResult solve_diag_majorizer(const SymMatrix& m,
                                         double floor_value,
                                         const DiagSdpOptions& opts) {
  const int n = m.order();
  if (!m.all_finite())
    throw std::invalid_argument("solve_diag_majorizer: non-finite entry");

  // Gershgorin point: feasible by diagonal dominance; also the box edge.
  Eigen::VectorXd gersh(n);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) row += std::abs(m(i, j));
    gersh(i) = std::max(floor_value, m(i, i) + row);
  }

  // Engine works in the maximize direction: x = -d in [-gersh, -floor].
  SymMatrix neg(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) neg.set(i, j, -m(i, j));
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, -floor_value);
  DiagSdpResult r = max_diag_under(neg, -gersh, hi, -gersh, opts);

  DiagMajorizerResult out;
  out.d = -r.x;
  out.min_eig = r.min_eig;
  out.converged = r.converged;
  return out;
}

Eigen::VectorXd knockoff_sdp_s(const SymMatrix& sigma, double margin,
                               const DiagSdpOptions& opts) {
  const int n = sigma.order();
  Eigen::MatrixXd a_dense =
      2.0 * sigma.to_dense() - margin * Eigen::MatrixXd::Identity(n, n);
  SymMatrix a = SymMatrix::from_dense(a_dense);
  double lmin = min_eigenvalue(sigma);
  if (2.0 * lmin <= margin)
    throw FactorizationError(
        "knockoff_sdp_s: sigma too close to singular (lambda_min = " +
        std::to_string(lmin) + ")");
  double equi = std::min(1.0, 2.0 * lmin - margin);
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, std::max(0.0, equi));
  DiagSdpResult r = max_diag_under(a, Eigen::VectorXd::Zero(n),
                                   Eigen::VectorXd::Ones(n), x0, opts);
  return r.x;
}

}  // namespace pkf
