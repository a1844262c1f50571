#pragma once

#include <Eigen/Dense>

namespace pkf {

/// Least-squares fit of y on the augmented design [x xt], reported in the
/// sum/difference basis.  eta = bhat_ls + btilde_ls, xi = bhat_ls - btilde_ls.
struct SplitCoefficients {
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;
  double residual_norm = 0.0;  // norm of y minus its projection on [x xt]
  int dof = 0;                 // n - 2p
};

enum class StatKind { w1, w2, least_squares };

const char* stat_kind_name(StatKind k);
StatKind stat_kind_from_name(const std::string& name);

struct FeatureStatistics {
  Eigen::VectorXd w;
  StatKind kind = StatKind::w1;
  double lambda = 0.0;
  Eigen::VectorXd sum_coef;   // bhat + btilde
  Eigen::VectorXd diff_coef;  // bhat - btilde
};

struct HalfLassoFit {
  Eigen::VectorXd sum_coef;   // argmin of the penalized subproblem
  Eigen::VectorXd diff_coef;  // unpenalized: equals the split xi exactly
  double lambda = 0.0;
  int sweeps = 0;
  double kkt_residual = 0.0;
  // |objective at solution - (residual part + subproblem objectives)|;
  // exact decoupling makes this rounding-level.
  double decoupling_gap = 0.0;
};

/// Regress y on [x xt] via the orthogonal sum/difference split.  Requires
/// n > 2p and both (x+xt)/2 and (x-xt)/2 full column rank.
SplitCoefficients least_squares_split(const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& xt,
                                      const Eigen::VectorXd& y);

/// Data-driven penalty: mu * residual_norm / sqrt(n - 2p).
double default_lambda(const SplitCoefficients& split, double mu = 0.75);

/// Solve min 1/2 ||y - x bhat - xt btilde||^2 + lambda ||bhat + btilde||_1.
/// The difference coordinate is unpenalized and solved exactly; the sum
/// coordinate is a Lasso on (x+xt)/2 solved by cyclic coordinate descent on
/// the Gram form (KKT tolerance 1e-8 * p and coordinate-change 1e-10).
HalfLassoFit half_lasso(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xt,
                        const Eigen::VectorXd& y, double lambda);

/// w1:  W_j = sum_j * sign(diff_j)
/// w2:  W_j = max(|bhat_j|, |btilde_j|) * sign(|bhat_j| - |btilde_j|)
/// with sign(0) = 0, so exact ties give W_j = 0 (never selectable).
FeatureStatistics make_statistic(const Eigen::VectorXd& sum_coef,
                                 const Eigen::VectorXd& diff_coef,
                                 StatKind kind, double lambda = 0.0);

/// Identity-map statistic on the raw least-squares split (w1 formula).
FeatureStatistics least_squares_statistic(const SplitCoefficients& split);

/// Classical knockoff sign-max statistic: joint Lasso of y on [x xt_P]
/// with P = {i : s_i >= mask_floor}; W_j = 0 off P.
FeatureStatistics lasso_signmax_baseline(const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& xt,
                                         const Eigen::VectorXd& y,
                                         double lambda,
                                         const Eigen::VectorXd& s,
                                         double mask_floor = 0.001);

}  // namespace pkf
