#include "pseudoknockoff/construct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pseudoknockoff/numerics.hpp"
#include "pseudoknockoff/rng.hpp"

namespace pkf {

const char* method_name(Method m) {
  switch (m) {
    case Method::orthogonal: return "orthogonal";
    case Method::block_diagonal: return "block_diagonal";
    case Method::general: return "general";
    case Method::knockoff_equi: return "knockoff_equi";
    case Method::knockoff_sdp: return "knockoff_sdp";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "orthogonal") return Method::orthogonal;
  if (name == "block_diagonal") return Method::block_diagonal;
  if (name == "general") return Method::general;
  if (name == "knockoff_equi") return Method::knockoff_equi;
  if (name == "knockoff_sdp") return Method::knockoff_sdp;
  throw std::invalid_argument("unknown construction method: " + name);
}

namespace {

void check_shapes(const Eigen::MatrixXd& x, const SymMatrix& sigma) {
  if (sigma.order() != x.cols())
    throw std::invalid_argument("construction: sigma order != design columns");
  if (x.rows() < 2 * x.cols())
    throw std::invalid_argument(
        "construction: requires n >= 2p for the orthonormal complement (n = " +
        std::to_string(x.rows()) + ", p = " + std::to_string(x.cols()) + ")");
}

/// Contiguous blocks of the given width; a short trailing block is allowed.
std::vector<std::vector<int>> contiguous_groups(int p, int width) {
  if (width <= 0)
    throw std::invalid_argument("partition: group size must be > 0");
  std::vector<std::vector<int>> groups;
  for (int start = 0; start < p; start += width) {
    std::vector<int> g;
    for (int j = start; j < std::min(start + width, p); ++j) g.push_back(j);
    groups.push_back(std::move(g));
  }
  return groups;
}

/// Classes {k, k+m, ...} for k = 0..m-1.
std::vector<std::vector<int>> interleaved_classes(int p, int m) {
  if (m <= 0 || m > p)
    throw std::invalid_argument("partition: class count must be in [1, p]");
  std::vector<std::vector<int>> classes(m);
  for (int j = 0; j < p; ++j) classes[j % m].push_back(j);
  return classes;
}

void check_partition(const std::vector<std::vector<int>>& part, int p) {
  std::vector<int> seen(p, 0);
  for (const auto& g : part) {
    if (g.empty()) throw std::invalid_argument("partition: empty part");
    for (int j : g) {
      if (j < 0 || j >= p)
        throw std::invalid_argument("partition: index out of range");
      if (seen[j]++)
        throw std::invalid_argument("partition: index repeated");
    }
  }
  for (int j = 0; j < p; ++j)
    if (!seen[j]) throw std::invalid_argument("partition: index missing");
}

}  // namespace

Eigen::MatrixXd build_xtilde_from_b(const Eigen::MatrixXd& x,
                                    const SymMatrix& sigma, const SymMatrix& b,
                                    std::uint64_t seed) {
  check_shapes(x, sigma);
  const int p = int(x.cols());
  if (b.order() != p)
    throw std::invalid_argument("build_xtilde_from_b: b order mismatch");

  SymMatrix sigma_inv = inverse_spd(sigma);
  Eigen::MatrixXd gap = b.to_dense() - sigma_inv.to_dense();
  // c^T c = b - sigma^{-1}; throws if b fails to dominate sigma^{-1}.
  Eigen::MatrixXd c;
  try {
    c = chol_psd(SymMatrix::from_dense(gap), 1e-8).transpose();
  } catch (const FactorizationError& e) {
    throw FactorizationError(
        std::string("build_xtilde_from_b: b does not dominate sigma^{-1} (") +
        e.what() + ")");
  }

  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd b_inv = solve_spd(b, eye);
  Eigen::MatrixXd u = orthonormal_complement(x, p, seed);
  return x * (eye - 2.0 * sigma_inv.to_dense() * b_inv) + 2.0 * u * c * b_inv;
}

PseudoKnockoff construct_orthogonal(const Eigen::MatrixXd& x,
                                    const SymMatrix& sigma,
                                    std::uint64_t seed) {
  check_shapes(x, sigma);
  const int p = int(x.cols());
  SvdThin svd = svd_thin(x);
  if (svd.d(p - 1) <= 1e-12 * svd.d(0))
    throw FactorizationError(
        "construct_orthogonal: design rank deficient (sigma_min/sigma_max = " +
        std::to_string(svd.d(p - 1) / svd.d(0)) + ")");
  Eigen::MatrixXd w = orthonormal_complement(x, p, seed);

  PseudoKnockoff pk;
  pk.method = Method::orthogonal;
  pk.xt = w * svd.d.asDiagonal() * svd.v.transpose();
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  pk.b = SymMatrix::from_dense(2.0 * solve_spd(sigma, eye));
  return pk;
}

double block_gamma(const SymMatrix& sigma,
                   const std::vector<std::vector<int>>& groups) {
  const int p = sigma.order();
  check_partition(groups, p);
  // D = blockdiag(Sigma_GG^{-1/2}); gamma from lambda_min(D Sigma D).
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p, p);
  for (const auto& g : groups) {
    EigResult eig = eig_sym(sigma.submatrix(g));
    if (eig.values(int(g.size()) - 1) <= 0.0)
      throw FactorizationError(
          "block_gamma: group block not positive definite (lambda_min = " +
          std::to_string(eig.values(int(g.size()) - 1)) + ")");
    Eigen::MatrixXd inv_sqrt =
        eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() *
        eig.vectors.transpose();
    for (size_t a = 0; a < g.size(); ++a)
      for (size_t bb = 0; bb < g.size(); ++bb)
        d(g[a], g[bb]) = inv_sqrt(a, bb);
  }
  Eigen::MatrixXd scaled = d * sigma.to_dense() * d;
  double lmin = min_eigenvalue(SymMatrix::from_dense(scaled));
  if (lmin <= 0.0)
    throw FactorizationError("block_gamma: scaled Gram not positive definite");
  return std::min(1.0, 2.0 * lmin) / 1.2;
}

PseudoKnockoff construct_block_diagonal(const Eigen::MatrixXd& x,
                                        const SymMatrix& sigma,
                                        const ConstructOptions& opts) {
  check_shapes(x, sigma);
  const int p = int(x.cols());
  auto groups = opts.custom_partition.empty()
                    ? contiguous_groups(p, opts.group_size)
                    : opts.custom_partition;
  check_partition(groups, p);
  double gamma = block_gamma(sigma, groups);

  // b = 2 diag(S_gg^{-1}) with S_gg = gamma Sigma_gg.
  SymMatrix b(p);
  for (const auto& g : groups) {
    SymMatrix block = sigma.submatrix(g);
    Eigen::MatrixXd eye =
        Eigen::MatrixXd::Identity(int(g.size()), int(g.size()));
    Eigen::MatrixXd inv = solve_spd(block, eye);
    for (size_t a = 0; a < g.size(); ++a)
      for (size_t bb = 0; bb <= a; ++bb)
        b.set(g[a], g[bb], 2.0 / gamma * inv(a, bb));
  }

  PseudoKnockoff pk;
  pk.method = Method::block_diagonal;
  pk.partition = groups;
  pk.gamma = gamma;
  pk.b = b;
  pk.xt = build_xtilde_from_b(x, sigma, b, opts.seed);
  return pk;
}

PseudoKnockoff construct_general(const Eigen::MatrixXd& x,
                                 const SymMatrix& sigma,
                                 const ConstructOptions& opts) {
  check_shapes(x, sigma);
  const int p = int(x.cols());
  auto classes = opts.custom_partition.empty()
                     ? interleaved_classes(p, opts.m)
                     : opts.custom_partition;
  check_partition(classes, p);
  const double gamma = opts.general_gamma;
  if (gamma < 1.0)
    throw std::invalid_argument(
        "construct_general: gamma must be >= 1 so b dominates sigma^{-1}");

  SymMatrix sigma_inv = inverse_spd(sigma);

  // Start from gamma sigma^{-1}, then overwrite each within-class block by
  // its diagonal majorizer.
  Eigen::MatrixXd b_dense = gamma * sigma_inv.to_dense();
  std::vector<int> klass(p, -1);
  for (size_t k = 0; k < classes.size(); ++k)
    for (int j : classes[k]) klass[j] = int(k);
  for (const auto& cls : classes) {
    SymMatrix m(int(cls.size()));
    for (size_t a = 0; a < cls.size(); ++a)
      for (size_t bb = 0; bb <= a; ++bb)
        m.set(int(a), int(bb), gamma * sigma_inv(cls[a], cls[bb]));
    DiagMajorizerResult maj = solve_diag_majorizer(m, opts.sdp_floor);
    for (size_t a = 0; a < cls.size(); ++a) {
      for (size_t bb = 0; bb < cls.size(); ++bb)
        if (a != bb) b_dense(cls[a], cls[bb]) = 0.0;
      b_dense(cls[a], cls[a]) = maj.d(int(a));
    }
  }
  SymMatrix b = SymMatrix::from_dense(b_dense);

  // The class majorizers guarantee b >= gamma sigma^{-1} up to solver slack.
  SymMatrix slack = SymMatrix::from_dense(b_dense - gamma * sigma_inv.to_dense());
  double lmin = min_eigenvalue(slack);
  if (lmin < -1e-8 * std::max(1.0, b.max_abs()))
    throw FactorizationError(
        "construct_general: majorizer failed to dominate gamma sigma^{-1} "
        "(min eig " + std::to_string(lmin) + ")");

  PseudoKnockoff pk;
  pk.method = Method::general;
  pk.partition = classes;
  pk.gamma = gamma;
  pk.b = b;
  pk.xt = build_xtilde_from_b(x, sigma, b, opts.seed);
  return pk;
}

PseudoKnockoff construct_knockoff_baseline(const Eigen::MatrixXd& x,
                                           const SymMatrix& sigma,
                                           bool sdp_mode, std::uint64_t seed) {
  check_shapes(x, sigma);
  const int p = int(x.cols());

  Eigen::VectorXd s;
  if (sdp_mode) {
    s = knockoff_sdp_s(sigma);
  } else {
    double lmin = min_eigenvalue(sigma);
    if (lmin <= 0.0)
      throw FactorizationError(
          "construct_knockoff_baseline: Gram not positive definite");
    s = Eigen::VectorXd::Constant(p, std::min(1.0, 2.0 * lmin));
  }
  // Tiny floor keeps b = 2 diag(s)^{-1} finite; far below every reported
  // tolerance.
  constexpr double kSFloor = 1e-10;
  for (int i = 0; i < p; ++i) s(i) = std::max(s(i), kSFloor);

  SymMatrix b(p);
  for (int i = 0; i < p; ++i) b.set(i, i, 2.0 / s(i));

  PseudoKnockoff pk;
  pk.method = sdp_mode ? Method::knockoff_sdp : Method::knockoff_equi;
  pk.s = s;
  pk.b = b;
  pk.xt = build_xtilde_from_b(x, sigma, b, seed);
  return pk;
}

PseudoKnockoff construct_method(Method method, const DesignEnsemble& design,
                                const ConstructOptions& opts) {
  ConstructOptions local = opts;
  if (local.seed == 0)
    local.seed = hash_combine(design.seed, 0xc07 + std::uint64_t(method));
  switch (method) {
    case Method::orthogonal:
      return construct_orthogonal(design.x, design.sigma_hat, local.seed);
    case Method::block_diagonal:
      return construct_block_diagonal(design.x, design.sigma_hat, local);
    case Method::general:
      return construct_general(design.x, design.sigma_hat, local);
    case Method::knockoff_equi:
      return construct_knockoff_baseline(design.x, design.sigma_hat, false,
                                         local.seed);
    case Method::knockoff_sdp:
      return construct_knockoff_baseline(design.x, design.sigma_hat, true,
                                         local.seed);
  }
  throw std::logic_error("construct_method: unknown method");
}

ValidationReport validate_construction(const Eigen::MatrixXd& x,
                                       const PseudoKnockoff& pk,
                                       const SymMatrix& sigma,
                                       double tol_rel) {
  const int p = int(x.cols());
  ValidationReport rep;
  rep.tol = tol_rel * (1.0 + sigma.max_abs());

  Eigen::MatrixXd xtxt = pk.xt.transpose() * pk.xt;
  rep.gram_match = (xtxt - sigma.to_dense()).cwiseAbs().maxCoeff();

  Eigen::MatrixXd cross = (x + pk.xt).transpose() * (x - pk.xt);
  rep.cross_orth = cross.cwiseAbs().maxCoeff();

  // (x - xt)^T (x - xt) = 4 b^{-1}, compared at the b^{-1} scale.
  Eigen::MatrixXd diff_gram = (x - pk.xt).transpose() * (x - pk.xt);
  Eigen::MatrixXd four_binv;
  if (pk.s.size() == p) {
    four_binv = Eigen::MatrixXd(2.0 * pk.s.asDiagonal());
  } else {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    four_binv = 4.0 * solve_spd(pk.b, eye);
  }
  rep.var_identity = (diff_gram - four_binv).cwiseAbs().maxCoeff() /
                     (1.0 + four_binv.cwiseAbs().maxCoeff());

  Eigen::MatrixXd xtx_cross = x.transpose() * pk.xt;
  switch (pk.method) {
    case Method::orthogonal:
      rep.method_identity = xtx_cross.cwiseAbs().maxCoeff();
      rep.detail = "x^T xt = 0";
      break;
    case Method::block_diagonal: {
      Eigen::MatrixXd gap = sigma.to_dense() - xtx_cross;
      for (const auto& g : pk.partition)
        for (int a : g)
          for (int bb : g) gap(a, bb) -= pk.gamma * sigma(a, bb);
      rep.method_identity = gap.cwiseAbs().maxCoeff();
      rep.detail = "sigma - x^T xt = group-diagonal gap";
      break;
    }
    case Method::general: {
      // Within-class blocks of b diagonal (exact) and b >= gamma sigma^{-1}.
      SymMatrix sigma_inv = inverse_spd(sigma);
      Eigen::MatrixXd slack =
          pk.b.to_dense() - pk.gamma * sigma_inv.to_dense();
      double lmin = min_eigenvalue(SymMatrix::from_dense(slack));
      double offclass = 0.0;
      std::vector<int> klass(p, -1);
      for (size_t k = 0; k < pk.partition.size(); ++k)
        for (int j : pk.partition[k]) klass[j] = int(k);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          if (i == j) continue;
          if (klass[i] == klass[j])
            offclass = std::max(offclass, std::abs(pk.b(i, j)));
          else
            offclass = std::max(offclass, std::abs(slack(i, j)));
        }
      // Residuals live on b's scale (b ~ gamma sigma^{-1} can be large),
      // so report them relative to it.
      rep.method_identity = std::max(offclass, std::max(0.0, -lmin)) /
                            std::max(1.0, pk.b.max_abs());
      rep.detail = "b class-diagonal and dominating gamma sigma^{-1}, "
                   "relative to max|b|";
      break;
    }
    case Method::knockoff_equi:
    case Method::knockoff_sdp: {
      Eigen::MatrixXd want = sigma.to_dense();
      want.diagonal() -= pk.s;
      rep.method_identity = (xtx_cross - want).cwiseAbs().maxCoeff();
      rep.detail = "x^T xt = sigma - diag(s)";
      break;
    }
  }

  rep.pass = rep.gram_match <= rep.tol && rep.cross_orth <= rep.tol &&
             rep.var_identity <= 1e-6 && rep.method_identity <= rep.tol;
  return rep;
}

}  // namespace pkf
