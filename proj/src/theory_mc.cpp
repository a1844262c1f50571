#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pseudoknockoff/numerics.hpp"
#include "pseudoknockoff/parallel.hpp"
#include "pseudoknockoff/stats.hpp"
#include "pseudoknockoff/theory.hpp"

namespace pkf {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kLn2 = 0.6931471805599453;

double lcosh(double z) {
  z = std::abs(z);
  return z - kLn2 + std::log1p(std::exp(-2.0 * z));
}

// Mean and standard error of the mean, reduced in index order so the
// result is independent of how the trials were scheduled.
McEstimate reduce_mean(const std::vector<double>& vals) {
  McEstimate out;
  out.trials = static_cast<std::int64_t>(vals.size());
  const double mean =
      std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  out.estimate = mean;
  out.se = vals.size() > 1
               ? std::sqrt(ss / (double(vals.size()) - 1.0) / double(vals.size()))
               : 0.0;
  return out;
}

}  // namespace

NullSignModel::NullSignModel(std::vector<int> sizes, SignCoupling c,
                             double p_positive)
    : group_sizes(std::move(sizes)), coupling(c) {
  if (group_sizes.empty()) {
    throw std::invalid_argument("NullSignModel: needs at least one group");
  }
  for (int s : group_sizes) {
    if (s < 1) throw std::invalid_argument("NullSignModel: group sizes must be >= 1");
  }
  if (p_positive != 0.5) {
    throw std::invalid_argument(
        "NullSignModel: signs must be symmetric (p_positive = 0.5); "
        "asymmetric signs break every verified identity");
  }
  if (coupling == SignCoupling::copies) {
    for (int s : group_sizes) {
      if (s != group_sizes.front()) {
        throw std::invalid_argument(
            "NullSignModel: the copies coupling needs equal group sizes");
      }
    }
  }
}

int NullSignModel::total() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), 0);
}

void NullSignModel::sample_signs(CounterRng& rng,
                                 std::vector<std::int8_t>& out) const {
  out.resize(static_cast<std::size_t>(total()));
  if (coupling == SignCoupling::independent) {
    for (auto& s : out) s = (rng.next_u64() & 1u) ? 1 : -1;
    return;
  }
  const int copies = m();
  const int base = group_sizes.front();
  for (int l = 0; l < base; ++l) {
    const std::int8_t s = (rng.next_u64() & 1u) ? 1 : -1;
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(l) * copies, copies, s);
  }
}

McEstimate mc_fixed_t_expectation(const NullSignModel& model,
                                  std::int64_t trials, std::uint64_t seed,
                                  int n_threads) {
  if (trials < 2) throw std::invalid_argument("mc_fixed_t_expectation: trials must be >= 2");
  const double groups = model.m();
  std::vector<double> vals(static_cast<std::size_t>(trials));
  const CounterRng root(seed);
  parallel_for(
      trials,
      [&](std::int64_t i) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(i));
        std::vector<std::int8_t> signs;
        model.sample_signs(rng, signs);
        std::int64_t pos = 0;
        for (std::int8_t s : signs) pos += s > 0;
        const auto neg = static_cast<std::int64_t>(signs.size()) - pos;
        vals[static_cast<std::size_t>(i)] = double(pos) / (double(neg) + groups);
      },
      n_threads);
  return reduce_mean(vals);
}

McEstimate mc_sup_ratio(const NullSignModel& model, std::int64_t trials,
                        std::uint64_t seed, int n_threads) {
  if (trials < 2) throw std::invalid_argument("mc_sup_ratio: trials must be >= 2");
  const double groups = model.m();
  std::vector<double> vals(static_cast<std::size_t>(trials));
  const CounterRng root(seed);
  parallel_for(
      trials,
      [&](std::int64_t i) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(i));
        std::vector<std::int8_t> signs;
        model.sample_signs(rng, signs);
        std::int64_t pos = 0, neg = 0;
        double sup = 0.0;
        for (std::int8_t s : signs) {
          (s > 0 ? pos : neg) += 1;
          sup = std::max(sup, double(pos) / (double(neg) + groups));
        }
        vals[static_cast<std::size_t>(i)] = sup;
      },
      n_threads);
  return reduce_mean(vals);
}

McEstimate mc_mgf(const NullSignModel& model, double t, double theta, int i,
                  int j, std::int64_t trials, std::uint64_t seed,
                  int n_threads) {
  if (trials < 2) throw std::invalid_argument("mc_mgf: trials must be >= 2");
  if (!(theta > 0.0) || !(t > 0.0)) {
    throw std::invalid_argument("mc_mgf: requires t > 0 and theta > 0");
  }
  if (i < 1 || j < i || j > model.total()) {
    throw std::invalid_argument("mc_mgf: needs 1 <= i <= j <= total()");
  }
  std::vector<double> vals(static_cast<std::size_t>(trials));
  const CounterRng root(seed);
  parallel_for(
      trials,
      [&](std::int64_t trial) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(trial));
        std::vector<std::int8_t> signs;
        model.sample_signs(rng, signs);
        std::int64_t vi = 0, vj = 0;
        for (int k = 0; k < j; ++k) {
          const bool positive = signs[static_cast<std::size_t>(k)] > 0;
          vj += positive;
          if (k < i) vi += positive;
        }
        vals[static_cast<std::size_t>(trial)] = std::exp(
            theta * (double(vj) + t * double(vi) - 0.5 * (j + t * i)));
      },
      n_threads);
  return reduce_mean(vals);
}

double mgf_product_bound(double t, double theta, int i, int j, int m) {
  if (!(theta > 0.0) || !(t > 0.0) || m < 1 || i < 1 || j < i) {
    throw std::invalid_argument("mgf_product_bound: invalid arguments");
  }
  const double dm = m;
  return std::exp((double(i) / dm) * lcosh(0.5 * (1.0 + t) * dm * theta) +
                  (double(j - i) / dm) * lcosh(0.5 * dm * theta));
}

double orthant_prob(double mu) {
  if (!(mu >= -1.0 && mu <= 1.0)) {
    throw std::invalid_argument("orthant_prob: correlation must be in [-1, 1]");
  }
  return 0.25 + std::asin(mu) / (2.0 * kPi);
}

double lemma_cov_bound_check(const std::vector<double>& mu_grid,
                             double quad_coeff) {
  double worst = 0.0;
  for (double mu : mu_grid) {
    if (!(mu >= -1.0 && mu <= 1.0)) {
      throw std::invalid_argument("lemma_cov_bound_check: correlation out of [-1, 1]");
    }
    const double exact = std::asin(mu) / (2.0 * kPi);
    const double linear = mu / (2.0 * kPi);
    const double quad = quad_coeff * mu * mu;
    for (double w : {1.0, -1.0}) {
      // w = w_i w_j collapses the four sign pairs to two products.
      worst = std::max(worst, exact * w - (linear * w + quad));
    }
  }
  return worst;
}

OrtBoundReport thm_ort_bound_check(const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& xt,
                                   const Eigen::VectorXd& y,
                                   std::int64_t trials,
                                   const std::vector<double>& delta_grid,
                                   const std::vector<int>& j_grid,
                                   std::uint64_t seed, int n_threads) {
  const auto p = static_cast<int>(x.cols());
  if (trials < 2) throw std::invalid_argument("thm_ort_bound_check: trials must be >= 2");
  if (delta_grid.empty() || j_grid.empty()) {
    throw std::invalid_argument("thm_ort_bound_check: empty delta or j grid");
  }
  for (double d : delta_grid) {
    if (!(d > 0.0 && d < 1.0)) {
      throw std::invalid_argument("thm_ort_bound_check: delta must lie in (0, 1)");
    }
  }
  for (int j : j_grid) {
    if (j < 1 || j > p) {
      throw std::invalid_argument("thm_ort_bound_check: j must lie in [1, p]");
    }
  }
  for (std::size_t q = 1; q < j_grid.size(); ++q) {
    if (j_grid[q] <= j_grid[q - 1]) {
      throw std::invalid_argument(
          "thm_ort_bound_check: j grid must be strictly increasing");
    }
  }
  const Eigen::MatrixXd cross = x.transpose() * xt;
  const double scale = std::max(1.0, (x.transpose() * x).cwiseAbs().maxCoeff());
  if (cross.cwiseAbs().maxCoeff() > 1e-6 * scale) {
    throw std::invalid_argument(
        "thm_ort_bound_check: companion is not orthogonal to the design");
  }

  // One response realization fixes the coefficient sum eta: the statistic
  // magnitudes |W| = |eta| and the reference signs are functions of eta
  // alone, while the exceedance randomness comes from xi ~ N(0, b) which is
  // independent of eta, so fresh xi draws sample the conditional law.
  const SplitCoefficients split = least_squares_split(x, xt, y);
  const SymMatrix b_inv_quarter = SymMatrix::gram(x - xt);  // 4 b^{-1}
  const SymMatrix b = SymMatrix::from_dense(
      4.0 * inverse_spd(b_inv_quarter).to_dense());

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int c) {
    const double ma = std::abs(split.eta(a)), mc = std::abs(split.eta(c));
    return ma != mc ? ma > mc : a < c;
  });
  std::vector<double> w(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    w[static_cast<std::size_t>(k)] = split.eta(k) >= 0.0 ? 1.0 : -1.0;
  }

  // Standardized precision proxy: mu_ij = b_ij / sqrt(b_ii b_jj).
  const Eigen::MatrixXd bd = b.to_dense();
  const Eigen::VectorXd d_inv_sqrt = bd.diagonal().cwiseSqrt().cwiseInverse();
  const SymMatrix mu = SymMatrix::from_dense(
      d_inv_sqrt.asDiagonal() * bd * d_inv_sqrt.asDiagonal());

  OrtBoundReport rep;
  const int nj = static_cast<int>(j_grid.size());
  std::vector<double> lambda(static_cast<std::size_t>(nj));
  for (int q = 0; q < nj; ++q) {
    const int j = j_grid[static_cast<std::size_t>(q)];
    const std::vector<int> top(order.begin(), order.begin() + j);
    lambda[static_cast<std::size_t>(q)] = max_eigenvalue(mu.submatrix(top));
    rep.lambda_below_j = rep.lambda_below_j && lambda[static_cast<std::size_t>(q)] < j;
  }

  const Eigen::MatrixXd chol = chol_psd(b);
  std::vector<std::int32_t> vplus(static_cast<std::size_t>(trials * nj));
  const CounterRng root(seed);
  parallel_for(
      trials,
      [&](std::int64_t trial) {
        CounterRng rng = root.substream(static_cast<std::uint64_t>(trial));
        Eigen::VectorXd z(p);
        for (int k = 0; k < p; ++k) z(k) = rng.next_gaussian();
        const Eigen::VectorXd xi = chol * z;
        int count = 0, upto = 0;
        for (int q = 0; q < nj; ++q) {
          const int j = j_grid[static_cast<std::size_t>(q)];
          for (; upto < j; ++upto) {
            const int idx = order[static_cast<std::size_t>(upto)];
            count += xi(idx) * w[static_cast<std::size_t>(idx)] > 0.0;
          }
          vplus[static_cast<std::size_t>(trial * nj + q)] = count;
        }
      },
      n_threads);

  constexpr double kC0 = 1.0 / (2.0 * kPi) + 1.5;
  for (int q = 0; q < nj; ++q) {
    const int j = j_grid[static_cast<std::size_t>(q)];
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t trial = 0; trial < trials; ++trial) {
      const double v = vplus[static_cast<std::size_t>(trial * nj + q)];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / double(trials);
    const double var =
        (sumsq - double(trials) * mean * mean) / (double(trials) - 1.0);
    rep.var_vplus.push_back(var);
    rep.var_cap.push_back(2.0 * kC0 * j);
    // The variance estimate fluctuates by about var * sqrt(2/(T-1)).
    rep.var_within_cap =
        rep.var_within_cap &&
        var <= rep.var_cap.back() + 3.0 * var * std::sqrt(2.0 / (double(trials) - 1.0));

    for (double delta : delta_grid) {
      OrtExceedanceCell cell;
      cell.delta = delta;
      cell.j = j;
      cell.lambda_max = lambda[static_cast<std::size_t>(q)];
      std::int64_t hits = 0;
      for (std::int64_t trial = 0; trial < trials; ++trial) {
        // V+/V- >= (1+delta)/(1-delta) with V- = j - V+ is exactly
        // 2 V+ >= (1+delta) j.
        hits += 2.0 * vplus[static_cast<std::size_t>(trial * nj + q)] >=
                (1.0 + delta) * j;
      }
      cell.freq = double(hits) / double(trials);
      cell.se = std::sqrt(cell.freq * (1.0 - cell.freq) / double(trials));
      cell.bound = (1.0 + 3.0 * kPi) * cell.lambda_max /
                   (kPi * delta * delta * double(j));
      cell.pass = cell.freq <= cell.bound + 3.0 * cell.se;
      rep.pass = rep.pass && cell.pass;
      rep.cells.push_back(cell);
    }
  }
  rep.pass = rep.pass && rep.lambda_below_j;
  return rep;
}

}  // namespace pkf
