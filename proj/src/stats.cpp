#include "pseudoknockoff/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pseudoknockoff/numerics.hpp"

namespace pkf {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double soft_threshold(double v, double lambda) {
  return sgn(v) * std::max(std::abs(v) - lambda, 0.0);
}

struct LassoSolve {
  Eigen::VectorXd coef;
  int sweeps = 0;
  double kkt = 0.0;
};

/// Cyclic coordinate descent for min 1/2 u^T g u - b^T u + lambda ||u||_1.
/// Converged when the max KKT violation <= tol_kkt and the largest
/// coordinate move in the final sweep <= 1e-10.
LassoSolve lasso_cd(const Eigen::MatrixXd& g, const Eigen::VectorXd& b,
                    double lambda, double tol_kkt, int max_sweeps = 10000) {
  const int p = int(b.size());
  for (int j = 0; j < p; ++j)
    if (g(j, j) <= 1e-14)
      throw FactorizationError("lasso_cd: zero-norm column " +
                               std::to_string(j));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd gu = Eigen::VectorXd::Zero(p);  // running g * u
  double kkt = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      double r = b(j) - gu(j) + g(j, j) * u(j);
      double unew = soft_threshold(r, lambda) / g(j, j);
      double delta = unew - u(j);
      if (delta != 0.0) {
        gu += delta * g.col(j);
        u(j) = unew;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change > 1e-10) continue;
    Eigen::VectorXd grad = g * u - b;  // fresh, no incremental drift
    gu = grad + b;
    kkt = 0.0;
    for (int j = 0; j < p; ++j) {
      double v = u(j) != 0.0 ? std::abs(grad(j) + lambda * sgn(u(j)))
                             : std::max(0.0, std::abs(grad(j)) - lambda);
      kkt = std::max(kkt, v);
    }
    if (kkt <= tol_kkt) return {u, sweep, kkt};
  }
  throw std::runtime_error("lasso_cd: no convergence after " +
                           std::to_string(max_sweeps) +
                           " sweeps (KKT residual " + std::to_string(kkt) +
                           ", tol " + std::to_string(tol_kkt) + ")");
}

Eigen::VectorXd gram_solve_named(const Eigen::MatrixXd& a,
                                 const Eigen::VectorXd& y, const char* what) {
  SymMatrix gram = SymMatrix::gram(a);
  try {
    return solve_spd(gram, Eigen::VectorXd(a.transpose() * y));
  } catch (const FactorizationError&) {
    throw FactorizationError(std::string("least_squares_split: ") + what +
                             " is rank deficient");
  }
}

}  // namespace

const char* stat_kind_name(StatKind k) {
  switch (k) {
    case StatKind::w1: return "w1";
    case StatKind::w2: return "w2";
    case StatKind::least_squares: return "least_squares";
  }
  throw std::logic_error("stat_kind_name: bad kind");
}

StatKind stat_kind_from_name(const std::string& name) {
  if (name == "w1") return StatKind::w1;
  if (name == "w2") return StatKind::w2;
  if (name == "least_squares") return StatKind::least_squares;
  throw std::invalid_argument("unknown statistic kind: " + name);
}

SplitCoefficients least_squares_split(const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& xt,
                                      const Eigen::VectorXd& y) {
  const int n = int(x.rows()), p = int(x.cols());
  if (xt.rows() != n || xt.cols() != p || y.size() != n)
    throw std::invalid_argument("least_squares_split: shape mismatch");
  if (n <= 2 * p)
    throw std::invalid_argument("least_squares_split: requires n > 2p");
  Eigen::MatrixXd aplus = 0.5 * (x + xt);
  Eigen::MatrixXd aminus = 0.5 * (x - xt);
  SplitCoefficients out;
  out.eta = gram_solve_named(aplus, y, "(x + xt)/2");
  out.xi = gram_solve_named(aminus, y, "(x - xt)/2");
  out.residual_norm = (y - aplus * out.eta - aminus * out.xi).norm();
  out.dof = n - 2 * p;
  return out;
}

double default_lambda(const SplitCoefficients& split, double mu) {
  if (split.dof <= 0)
    throw std::invalid_argument("default_lambda: nonpositive dof");
  return mu * split.residual_norm / std::sqrt(double(split.dof));
}

HalfLassoFit half_lasso(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                        const Eigen::VectorXd& y, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("half_lasso: lambda < 0");
  SplitCoefficients split = least_squares_split(x, xt, y);
  const int p = int(x.cols());
  Eigen::MatrixXd aplus = 0.5 * (x + xt);
  Eigen::MatrixXd gram = aplus.transpose() * aplus;
  Eigen::VectorXd b = aplus.transpose() * y;  // equals gram * eta exactly

  LassoSolve ls = lasso_cd(gram, b, lambda, 1e-8 * p);

  HalfLassoFit fit;
  fit.sum_coef = ls.coef;
  fit.diff_coef = split.xi;  // second subproblem is unpenalized least squares
  fit.lambda = lambda;
  fit.sweeps = ls.sweeps;
  fit.kkt_residual = ls.kkt;

  // Decoupled objective must reproduce the joint objective.
  Eigen::VectorXd bhat = 0.5 * (fit.sum_coef + fit.diff_coef);
  Eigen::VectorXd btil = 0.5 * (fit.sum_coef - fit.diff_coef);
  double joint = 0.5 * (y - x * bhat - xt * btil).squaredNorm() +
                 lambda * fit.sum_coef.lpNorm<1>();
  double split_sum = 0.5 * split.residual_norm * split.residual_norm +
                     0.5 * (aplus * (split.eta - fit.sum_coef)).squaredNorm() +
                     lambda * fit.sum_coef.lpNorm<1>();
  fit.decoupling_gap = std::abs(joint - split_sum);
  if (!(fit.decoupling_gap <= 1e-6 * std::max(1.0, joint)))
    throw std::logic_error("half_lasso: decoupling identity violated (gap " +
                           std::to_string(fit.decoupling_gap) + ")");
  return fit;
}

FeatureStatistics make_statistic(const Eigen::VectorXd& sum_coef,
                                 const Eigen::VectorXd& diff_coef,
                                 StatKind kind, double lambda) {
  if (sum_coef.size() != diff_coef.size())
    throw std::invalid_argument("make_statistic: length mismatch");
  const int p = int(sum_coef.size());
  FeatureStatistics st;
  st.kind = kind;
  st.lambda = lambda;
  st.sum_coef = sum_coef;
  st.diff_coef = diff_coef;
  st.w.resize(p);
  for (int j = 0; j < p; ++j) {
    if (kind == StatKind::w2) {
      double bhat = 0.5 * (sum_coef(j) + diff_coef(j));
      double btil = 0.5 * (sum_coef(j) - diff_coef(j));
      st.w(j) = std::max(std::abs(bhat), std::abs(btil)) *
                sgn(std::abs(bhat) - std::abs(btil));
    } else {
      st.w(j) = sum_coef(j) * sgn(diff_coef(j));
    }
  }
  return st;
}

FeatureStatistics least_squares_statistic(const SplitCoefficients& split) {
  return make_statistic(split.eta, split.xi, StatKind::least_squares, 0.0);
}

FeatureStatistics lasso_signmax_baseline(const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& xt,
                                         const Eigen::VectorXd& y,
                                         double lambda,
                                         const Eigen::VectorXd& s,
                                         double mask_floor) {
  const int p = int(x.cols());
  if (s.size() != p)
    throw std::invalid_argument("lasso_signmax_baseline: s length mismatch");
  std::vector<int> keep;
  for (int i = 0; i < p; ++i)
    if (s(i) >= mask_floor) keep.push_back(int(i));
  const int m = int(keep.size());

  Eigen::MatrixXd d(x.rows(), p + m);
  d.leftCols(p) = x;
  for (int k = 0; k < m; ++k) d.col(p + k) = xt.col(keep[k]);
  Eigen::MatrixXd gram = d.transpose() * d;
  Eigen::VectorXd b = d.transpose() * y;
  LassoSolve ls = lasso_cd(gram, b, lambda, 1e-8 * (p + m));

  Eigen::VectorXd bhat = ls.coef.head(p);
  Eigen::VectorXd btil = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < m; ++k) btil(keep[k]) = ls.coef(p + k);

  FeatureStatistics st;
  st.kind = StatKind::w2;
  st.lambda = lambda;
  st.sum_coef = bhat + btil;
  st.diff_coef = bhat - btil;
  st.w = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < m; ++k) {
    int j = keep[k];
    st.w(j) = std::max(std::abs(bhat(j)), std::abs(btil(j))) *
              sgn(std::abs(bhat(j)) - std::abs(btil(j)));
  }
  return st;
}

}  // namespace pkf
