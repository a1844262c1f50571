#include "pseudoknockoff/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pseudoknockoff/numerics.hpp"
#include "pseudoknockoff/rng.hpp"

namespace pkf {

namespace {

void require_p(int p) {
  if (p <= 0) throw std::invalid_argument("covariance model: p must be > 0");
}

}  // namespace

CovarianceModel CovarianceModel::identity(int p) {
  require_p(p);
  return {CovKind::identity, p, 0.0, 0.0, 0};
}

CovarianceModel CovarianceModel::ar(int p, double rho) {
  require_p(p);
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("ar model: rho must lie in [0, 1)");
  return {CovKind::ar, p, rho, 0.0, 0};
}

CovarianceModel CovarianceModel::grouped(int n_groups, int group_size,
                                         double rho, double gamma) {
  if (n_groups <= 0 || group_size <= 0)
    throw std::invalid_argument("group model: group counts must be > 0");
  return {CovKind::group, n_groups * group_size, rho, gamma, group_size};
}

CovarianceModel CovarianceModel::precision_a(int p, double rho) {
  require_p(p);
  return {CovKind::precision_a, p, rho, 0.0, 0};
}

CovarianceModel CovarianceModel::precision_b(int p, double rho) {
  require_p(p);
  return {CovKind::precision_b, p, rho, 0.0, 0};
}

CovarianceModel CovarianceModel::precision_c(int p, double rho) {
  require_p(p);
  return {CovKind::precision_c, p, rho, 0.0, 0};
}

const char* cov_kind_name(CovKind k) {
  switch (k) {
    case CovKind::identity: return "identity";
    case CovKind::ar: return "ar";
    case CovKind::group: return "group";
    case CovKind::precision_a: return "precision_a";
    case CovKind::precision_b: return "precision_b";
    case CovKind::precision_c: return "precision_c";
  }
  return "?";
}

CovKind cov_kind_from_name(const std::string& name) {
  if (name == "identity") return CovKind::identity;
  if (name == "ar") return CovKind::ar;
  if (name == "group") return CovKind::group;
  if (name == "precision_a") return CovKind::precision_a;
  if (name == "precision_b") return CovKind::precision_b;
  if (name == "precision_c") return CovKind::precision_c;
  throw std::invalid_argument("unknown covariance kind: " + name);
}

namespace {

SymMatrix build_precision(const CovarianceModel& m) {
  SymMatrix prec(m.p);
  switch (m.kind) {
    case CovKind::precision_a:
      // 5x5 equicorrelated blocks; a trailing partial block is allowed.
      for (int b = 0; b < m.p; b += 5) {
        int hi = std::min(b + 5, m.p);
        for (int i = b; i < hi; ++i) {
          prec.set(i, i, 1.0);
          for (int j = b; j < i; ++j) prec.set(i, j, m.rho);
        }
      }
      break;
    case CovKind::precision_b:
      for (int i = 0; i < m.p; ++i)
        for (int j = 0; j <= i; ++j) prec.set(i, j, std::pow(m.rho, i - j));
      break;
    case CovKind::precision_c:
      for (int i = 0; i < m.p; ++i) {
        prec.set(i, i, 1.0);
        for (int j = 0; j < i; ++j) prec.set(i, j, m.rho);
      }
      break;
    default:
      throw std::logic_error("build_precision: not a precision kind");
  }
  return prec;
}

}  // namespace

SymMatrix build_sigma(const CovarianceModel& m) {
  require_p(m.p);
  SymMatrix sigma(m.p);
  switch (m.kind) {
    case CovKind::identity:
      sigma = SymMatrix::identity(m.p);
      break;
    case CovKind::ar:
      for (int i = 0; i < m.p; ++i)
        for (int j = 0; j <= i; ++j) sigma.set(i, j, std::pow(m.rho, i - j));
      break;
    case CovKind::group: {
      int g = m.group_size;
      for (int i = 0; i < m.p; ++i) {
        sigma.set(i, i, 1.0);
        for (int j = 0; j < i; ++j)
          sigma.set(i, j, (i / g == j / g) ? m.rho : m.gamma * m.rho);
      }
      break;
    }
    case CovKind::precision_a:
    case CovKind::precision_b:
    case CovKind::precision_c: {
      SymMatrix prec = build_precision(m);
      double lmin = min_eigenvalue(prec);
      if (lmin <= 0.0)
        throw std::invalid_argument(
            std::string("covariance model ") + cov_kind_name(m.kind) +
            ": precision matrix not positive definite (lambda_min = " +
            std::to_string(lmin) + ")");
      sigma = inverse_spd(prec);
      break;
    }
  }
  double lmin = min_eigenvalue(sigma);
  if (lmin <= 0.0)
    throw std::invalid_argument(
        std::string("covariance model ") + cov_kind_name(m.kind) +
        ": not positive definite (lambda_min = " + std::to_string(lmin) + ")");
  return sigma;
}

DesignEnsemble sample_design(const CovarianceModel& model, int n,
                             std::uint64_t seed) {
  if (n <= 2 * model.p)
    throw std::invalid_argument(
        "sample_design: requires n > 2p (got n = " + std::to_string(n) +
        ", p = " + std::to_string(model.p) + ")");
  SymMatrix sigma = build_sigma(model);
  Eigen::MatrixXd chol = chol_psd(sigma);

  CounterRng rng = CounterRng(seed).substream(0xde51);
  Eigen::MatrixXd z(n, model.p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < model.p; ++j) z(i, j) = rng.next_gaussian();

  DesignEnsemble d;
  d.x = z * chol.transpose();  // rows ~ N(0, Sigma)
  for (int j = 0; j < model.p; ++j) {
    double norm = d.x.col(j).norm();
    if (norm == 0.0)
      throw std::runtime_error("sample_design: degenerate zero column");
    d.x.col(j) /= norm;
  }
  d.sigma_hat = SymMatrix::gram(d.x);
  d.model = model;
  d.seed = seed;
  return d;
}

std::vector<int> sample_support(int p, int k, std::uint64_t seed) {
  if (k < 0 || k > p)
    throw std::invalid_argument("sample_support: need 0 <= k <= p");
  std::vector<int> pool(p);
  for (int i = 0; i < p; ++i) pool[i] = i;
  CounterRng rng = CounterRng(seed).substream(0x5499);
  // Partial Fisher-Yates: first k slots become the sample.
  for (int i = 0; i < k; ++i) {
    int j = i + int(rng.next_below(std::uint64_t(p - i)));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> support(pool.begin(), pool.begin() + k);
  std::sort(support.begin(), support.end());
  return support;
}

Signal sample_signal_on_support(const std::vector<int>& support, int p,
                                double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0)
    throw std::invalid_argument("sample_signal: amplitude must be >= 0");
  Signal s;
  s.beta = Eigen::VectorXd::Zero(p);
  s.support = support;
  s.amplitude = amplitude;
  CounterRng rng = CounterRng(seed).substream(0x5160);
  for (int idx : support) {
    if (idx < 0 || idx >= p)
      throw std::invalid_argument("sample_signal: support index out of range");
    s.beta(idx) = (rng.next_u64() & 1) ? amplitude : -amplitude;
  }
  return s;
}

Signal sample_signal(int p, int k, double amplitude, std::uint64_t seed) {
  return sample_signal_on_support(sample_support(p, k, seed), p, amplitude,
                                  seed);
}

Eigen::VectorXd sample_response(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& beta,
                                std::uint64_t seed, bool noiseless) {
  if (beta.size() != x.cols())
    throw std::invalid_argument("sample_response: beta size mismatch");
  Eigen::VectorXd y = x * beta;
  if (!noiseless) {
    CounterRng rng = CounterRng(seed).substream(0xe515);
    for (int i = 0; i < y.size(); ++i) y(i) += rng.next_gaussian();
  }
  return y;
}

}  // namespace pkf
