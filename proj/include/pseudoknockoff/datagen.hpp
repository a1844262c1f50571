#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoknockoff/sym_matrix.hpp"

namespace pkf {

/// Population covariance families for the simulated designs.  The three
/// "precision" kinds parameterize Sigma^{-1} instead of Sigma.
enum class CovKind {
  identity,
  ar,           // Sigma_ij = rho^|i-j|
  group,        // unit diagonal, rho within group, gamma*rho across groups
  precision_a,  // Sigma^{-1} block diagonal, 5x5 blocks, off-diagonal rho
  precision_b,  // (Sigma^{-1})_ij = rho^|i-j|
  precision_c   // (Sigma^{-1})_ij = rho off the diagonal
};

struct CovarianceModel {
  CovKind kind = CovKind::identity;
  int p = 0;
  double rho = 0.0;
  double gamma = 0.0;   // between-group factor (group kind only)
  int group_size = 0;   // group kind only

  static CovarianceModel identity(int p);
  static CovarianceModel ar(int p, double rho);
  static CovarianceModel grouped(int n_groups, int group_size, double rho,
                                 double gamma);
  static CovarianceModel precision_a(int p, double rho);
  static CovarianceModel precision_b(int p, double rho);
  static CovarianceModel precision_c(int p, double rho);
};

const char* cov_kind_name(CovKind k);
CovKind cov_kind_from_name(const std::string& name);

/// Population covariance for the model.  Validates positive definiteness
/// and raises std::invalid_argument naming the offending eigenvalue.
SymMatrix build_sigma(const CovarianceModel& model);

/// A sampled design: rows drawn i.i.d. N(0, Sigma), then every column
/// scaled to unit Euclidean norm.  sigma_hat is the realized Gram X^T X.
struct DesignEnsemble {
  Eigen::MatrixXd x;
  SymMatrix sigma_hat;
  CovarianceModel model;
  std::uint64_t seed = 0;
};

DesignEnsemble sample_design(const CovarianceModel& model, int n,
                             std::uint64_t seed);

/// Sparse signal: k distinct coordinates carrying independent +-amplitude.
struct Signal {
  Eigen::VectorXd beta;
  std::vector<int> support;  // sorted, 0-based
  double amplitude = 0.0;
};

/// Uniformly random k-subset of {0..p-1}.
std::vector<int> sample_support(int p, int k, std::uint64_t seed);

Signal sample_signal(int p, int k, double amplitude, std::uint64_t seed);

/// Signs redrawn on a fixed support (used when the support is frozen
/// across trials).
Signal sample_signal_on_support(const std::vector<int>& support, int p,
                                double amplitude, std::uint64_t seed);

/// y = x beta + N(0, I_n); noiseless skips the noise term.
Eigen::VectorXd sample_response(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& beta,
                                std::uint64_t seed, bool noiseless = false);

}  // namespace pkf
