#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pseudoknockoff/construct.hpp"
#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/numerics.hpp"
#include "pseudoknockoff/rng.hpp"
#include "pseudoknockoff/stats.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace pkf;

namespace {

MatrixXd orthonormal_design(int n, int p, std::uint64_t seed) {
  return orthonormal_complement(MatrixXd(n, 0), p, seed);
}

// Synthetic pair with (x+xt)/2 having exactly orthonormal columns:
// x = sqrt(3) Q, xt = -x/3 + (4/sqrt(6)) U with U ⊥ Q orthonormal.
// Then A+^T A+ = I, A-^T A- = 2I, and (x+xt)^T (x-xt) = 0.
struct IdentityGramPair {
  MatrixXd x, xt;
};

IdentityGramPair identity_gram_pair(int n, int p, std::uint64_t seed) {
  MatrixXd q = orthonormal_design(n, p, seed);
  MatrixXd u = orthonormal_complement(q, p, seed + 1);
  IdentityGramPair pair;
  pair.x = std::sqrt(3.0) * q;
  pair.xt = -pair.x / 3.0 + (4.0 / std::sqrt(6.0)) * u;
  return pair;
}

double soft(double v, double lambda) {
  double a = std::abs(v) - lambda;
  return a > 0.0 ? (v > 0 ? a : -a) : 0.0;
}

}  // namespace

TEST_CASE("least_squares_split recovers beta on noiseless data") {
  DesignEnsemble d = sample_design(CovarianceModel::ar(10, 0.4), 50, 11);
  PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 3);
  VectorXd beta = sample_signal(10, 4, 3.5, 13).beta;
  VectorXd y = sample_response(d.x, beta, 17, /*noiseless=*/true);

  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  CHECK((sp.eta - beta).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((sp.xi - beta).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(sp.residual_norm <= 1e-8);
  CHECK(sp.dof == 30);
}

TEST_CASE("least_squares_split on response orthogonal to the span") {
  DesignEnsemble d = sample_design(CovarianceModel::identity(6), 30, 19);
  PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 3);
  MatrixXd both(30, 12);
  both << d.x, pk.xt;
  VectorXd y = 3.7 * orthonormal_complement(both, 1, 23).col(0);

  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  CHECK(sp.eta.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(sp.xi.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(sp.residual_norm == doctest::Approx(3.7).epsilon(1e-10));
}

TEST_CASE("least_squares_split satisfies the Pythagoras identity") {
  // The two half-designs and the residual are mutually orthogonal.
  DesignEnsemble d = sample_design(CovarianceModel::grouped(4, 3, 0.5, 0.2),
                                   60, 29);
  ConstructOptions opts;
  opts.group_size = 3;
  PseudoKnockoff pk = construct_block_diagonal(d.x, d.sigma_hat, opts);
  VectorXd beta = sample_signal(12, 3, 3.5, 31).beta;
  VectorXd y = sample_response(d.x, beta, 37);

  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  MatrixXd aplus = 0.5 * (d.x + pk.xt);
  MatrixXd aminus = 0.5 * (d.x - pk.xt);
  double lhs = y.squaredNorm();
  double rhs = (aplus * sp.eta).squaredNorm() +
               (aminus * sp.xi).squaredNorm() +
               sp.residual_norm * sp.residual_norm;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  // Also the displayed fit-residual definition.
  double rn = (y - aplus * sp.eta - aminus * sp.xi).norm();
  CHECK(rn == doctest::Approx(sp.residual_norm).epsilon(1e-12));
}

TEST_CASE("least_squares_split error contracts") {
  DesignEnsemble d = sample_design(CovarianceModel::identity(8), 40, 41);
  VectorXd y = VectorXd::Ones(40);
  // xt = x makes A- zero; xt = -x makes A+ zero.
  CHECK_THROWS_AS(least_squares_split(d.x, d.x, y), FactorizationError);
  CHECK_THROWS_AS(least_squares_split(d.x, MatrixXd(-d.x), y),
                  FactorizationError);
  // n <= 2p rejected.
  MatrixXd small = d.x.topRows(16);
  CHECK_THROWS_AS(least_squares_split(small, small, VectorXd::Ones(16)),
                  std::invalid_argument);
  CHECK_THROWS_AS(least_squares_split(d.x, d.x.leftCols(4), y),
                  std::invalid_argument);
}

TEST_CASE("split coefficient covariances match the construction") {
  // Over pure-noise responses: Cov(xi) = b, Cov(eta) = 4[(x+xt)^T(x+xt)]^{-1},
  // and eta, xi uncorrelated.
  const int p = 12, n = 50, trials = 2000;
  DesignEnsemble d = sample_design(CovarianceModel::ar(p, 0.4), n, 43);
  ConstructOptions opts;
  opts.group_size = 3;
  PseudoKnockoff pk = construct_block_diagonal(d.x, d.sigma_hat, opts);

  MatrixXd sum_gram = (d.x + pk.xt).transpose() * (d.x + pk.xt);
  SymMatrix cov_eta_sm = inverse_spd(SymMatrix::from_dense(sum_gram));
  MatrixXd cov_eta = 4.0 * cov_eta_sm.to_dense();

  MatrixXd acc_xi = MatrixXd::Zero(p, p), acc_eta = MatrixXd::Zero(p, p),
           acc_cross = MatrixXd::Zero(p, p);
  for (int t = 0; t < trials; ++t) {
    VectorXd y = sample_response(d.x, VectorXd::Zero(p), hash_combine(47, t));
    SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
    acc_xi += sp.xi * sp.xi.transpose();
    acc_eta += sp.eta * sp.eta.transpose();
    acc_cross += sp.eta * sp.xi.transpose();
  }
  acc_xi /= double(trials);
  acc_eta /= double(trials);
  acc_cross /= double(trials);

  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double se_xi = std::sqrt(
          (pk.b(i, i) * pk.b(j, j) + pk.b(i, j) * pk.b(i, j)) / trials);
      CHECK(std::abs(acc_xi(i, j) - pk.b(i, j)) <= 5.0 * se_xi);
      double se_eta = std::sqrt((cov_eta(i, i) * cov_eta(j, j) +
                                 cov_eta(i, j) * cov_eta(i, j)) /
                                trials);
      CHECK(std::abs(acc_eta(i, j) - cov_eta(i, j)) <= 5.0 * se_eta);
      double se_cross =
          std::sqrt(cov_eta(i, i) * pk.b(j, j) / trials);
      CHECK(std::abs(acc_cross(i, j)) <= 5.0 * se_cross);
    }
}

TEST_CASE("default_lambda arithmetic") {
  SplitCoefficients sp;
  sp.residual_norm = 10.0;
  sp.dof = 100;
  CHECK(default_lambda(sp, 0.75) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(default_lambda(sp) == doctest::Approx(0.75).epsilon(1e-15));  // mu def
  sp.residual_norm = 0.0;
  CHECK(default_lambda(sp) == 0.0);
  sp.dof = 0;
  CHECK_THROWS_AS(default_lambda(sp), std::invalid_argument);
}

TEST_CASE("half_lasso with lambda zero returns the least-squares eta") {
  DesignEnsemble d = sample_design(CovarianceModel::ar(10, 0.4), 50, 53);
  PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 3);
  VectorXd beta = sample_signal(10, 3, 3.5, 59).beta;
  VectorXd y = sample_response(d.x, beta, 61);

  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  HalfLassoFit fit = half_lasso(d.x, pk.xt, y, 0.0);
  CHECK((fit.sum_coef - sp.eta).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((fit.diff_coef - sp.xi).cwiseAbs().maxCoeff() == 0.0);  // exact
  CHECK(fit.kkt_residual <= 1e-8 * 10);
  CHECK(fit.decoupling_gap <= 1e-8);
}

TEST_CASE("half_lasso zeroes out under a dominating penalty") {
  DesignEnsemble d = sample_design(CovarianceModel::ar(8, 0.5), 40, 67);
  PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 3);
  VectorXd y = sample_response(d.x, sample_signal(8, 2, 3.5, 71).beta, 73);
  MatrixXd aplus = 0.5 * (d.x + pk.xt);
  double lam = 1.01 * (aplus.transpose() * y).cwiseAbs().maxCoeff();
  HalfLassoFit fit = half_lasso(d.x, pk.xt, y, lam);
  CHECK(fit.sum_coef.cwiseAbs().maxCoeff() == 0.0);
  // diff coordinate is unpenalized and stays the least-squares xi.
  CHECK(fit.diff_coef.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("half_lasso soft-thresholds exactly on an identity Gram") {
  const int n = 40, p = 7;
  IdentityGramPair pair = identity_gram_pair(n, p, 79);
  // Sanity on the synthetic pair: orthogonality constraint holds.
  MatrixXd cross = (pair.x + pair.xt).transpose() * (pair.x - pair.xt);
  REQUIRE(cross.cwiseAbs().maxCoeff() <= 1e-10);
  MatrixXd gplus = 0.25 * (pair.x + pair.xt).transpose() *
                   (pair.x + pair.xt);
  REQUIRE((gplus - MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <= 1e-10);

  CounterRng rng(83);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = 2.0 * rng.next_gaussian();
  SplitCoefficients sp = least_squares_split(pair.x, pair.xt, y);
  for (double lam : {0.1, 0.5, 1.5}) {
    HalfLassoFit fit = half_lasso(pair.x, pair.xt, y, lam);
    for (int j = 0; j < p; ++j)
      CHECK(fit.sum_coef(j) ==
            doctest::Approx(soft(sp.eta(j), lam)).epsilon(1e-9));
  }
}

TEST_CASE("half_lasso decoupling gap stays at rounding level") {
  DesignEnsemble d = sample_design(CovarianceModel::ar(16, 0.5), 60, 89);
  ConstructOptions opts;
  opts.m = 2;
  PseudoKnockoff pk = construct_general(d.x, d.sigma_hat, opts);
  VectorXd y = sample_response(d.x, sample_signal(16, 4, 3.5, 97).beta, 101);
  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  double lam0 = default_lambda(sp);
  for (double lam : {0.0, lam0, 2.0 * lam0}) {
    HalfLassoFit fit = half_lasso(d.x, pk.xt, y, lam);
    CHECK(fit.decoupling_gap <= 1e-8);
    CHECK(fit.kkt_residual <= 1e-8 * 16);
  }
}

TEST_CASE("make_statistic arithmetic") {
  VectorXd sum(2), diff(2);
  sum << 2.0, -1.0;
  diff << 0.7, -0.3;
  FeatureStatistics w1 = make_statistic(sum, diff, StatKind::w1);
  CHECK(w1.w(0) == 2.0);
  CHECK(w1.w(1) == 1.0);

  // bhat = 3, btilde = 1: sum = 4, diff = 2 -> W2 = 3.
  VectorXd s1(1), d1(1);
  s1 << 4.0;
  d1 << 2.0;
  FeatureStatistics w2 = make_statistic(s1, d1, StatKind::w2);
  CHECK(w2.w(0) == 3.0);

  // Exact tie: diff = 0 gives W = 0 under both kinds.
  VectorXd dz = VectorXd::Zero(2);
  CHECK(make_statistic(sum, dz, StatKind::w1).w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(make_statistic(sum, dz, StatKind::w2).w.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(make_statistic(sum, d1, StatKind::w1),
                  std::invalid_argument);
}

TEST_CASE("sign property holds for both statistic kinds") {
  CounterRng rng(103);
  VectorXd sum(50), diff(50);
  for (int j = 0; j < 50; ++j) {
    sum(j) = rng.next_gaussian();
    diff(j) = rng.next_gaussian();
  }
  for (StatKind kind : {StatKind::w1, StatKind::w2}) {
    FeatureStatistics st = make_statistic(sum, diff, kind);
    for (int j = 0; j < 50; ++j) {
      if (st.w(j) == 0.0) continue;
      double want = (sum(j) > 0 ? 1 : -1) * (diff(j) > 0 ? 1 : -1);
      CHECK((st.w(j) > 0 ? 1 : -1) == int(want));
    }
  }
}

TEST_CASE("least_squares_statistic is the identity map on eta") {
  SplitCoefficients sp;
  sp.eta.resize(2);
  sp.eta << 1.0, -2.0;
  sp.xi.resize(2);
  sp.xi << 0.5, 3.0;
  FeatureStatistics st = least_squares_statistic(sp);
  CHECK(st.kind == StatKind::least_squares);
  CHECK(st.w(0) == 1.0);
  CHECK(st.w(1) == -2.0);

  // Noiseless data: W_j = |beta_j| >= 0 for every coordinate.
  DesignEnsemble d = sample_design(CovarianceModel::ar(10, 0.3), 50, 107);
  PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 5);
  VectorXd beta = sample_signal(10, 4, 3.5, 109).beta;
  VectorXd y = sample_response(d.x, beta, 113, /*noiseless=*/true);
  FeatureStatistics w =
      least_squares_statistic(least_squares_split(d.x, pk.xt, y));
  for (int j = 0; j < 10; ++j)
    CHECK(w.w(j) == doctest::Approx(std::abs(beta(j))).epsilon(1e-8));
}

TEST_CASE("stat kind names round trip") {
  for (StatKind k : {StatKind::w1, StatKind::w2, StatKind::least_squares})
    CHECK(stat_kind_from_name(stat_kind_name(k)) == k);
  CHECK_THROWS_AS(stat_kind_from_name("lars"), std::invalid_argument);
}

TEST_CASE("null signs are conditionally symmetric for every kind") {
  // Fixed design, knockoff and signal; randomness only in the noise.
  const int p = 20, n = 70, k = 5, trials = 2000;
  DesignEnsemble d = sample_design(CovarianceModel::ar(p, 0.3), n, 127);
  ConstructOptions opts;
  opts.m = 2;
  PseudoKnockoff pk = construct_general(d.x, d.sigma_hat, opts);
  VectorXd beta = VectorXd::Zero(p);
  for (int j = 0; j < k; ++j) beta(j) = (j % 2 == 0) ? 3.5 : -3.5;

  std::vector<VectorXd> w_by_kind(3);
  std::vector<Eigen::VectorXi> pos(3, Eigen::VectorXi::Zero(p)),
      nonzero(3, Eigen::VectorXi::Zero(p));
  std::vector<MatrixXd> w_all(3, MatrixXd::Zero(trials, p));
  for (int t = 0; t < trials; ++t) {
    VectorXd y = sample_response(d.x, beta, hash_combine(131, t));
    SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
    HalfLassoFit fit = half_lasso(d.x, pk.xt, y, default_lambda(sp));
    w_by_kind[0] = make_statistic(fit.sum_coef, fit.diff_coef,
                                  StatKind::w1, fit.lambda).w;
    w_by_kind[1] = make_statistic(fit.sum_coef, fit.diff_coef,
                                  StatKind::w2, fit.lambda).w;
    w_by_kind[2] = least_squares_statistic(sp).w;
    for (int kind = 0; kind < 3; ++kind) {
      w_all[kind].row(t) = w_by_kind[kind].transpose();
      for (int j = 0; j < p; ++j) {
        if (w_by_kind[kind](j) == 0.0) continue;
        nonzero[kind](j) += 1;
        if (w_by_kind[kind](j) > 0.0) pos[kind](j) += 1;
      }
    }
  }

  for (int kind = 0; kind < 3; ++kind) {
    for (int j = k; j < p; ++j) {
      int m = nonzero[kind](j);
      if (m < 50) continue;  // too few conditioning events to test
      double phat = double(pos[kind](j)) / m;
      double se = std::sqrt(0.25 / m);
      CAPTURE(kind);
      CAPTURE(j);
      CAPTURE(m);
      CHECK(std::abs(phat - 0.5) <= 3.0 * se);
    }
  }

  // Counting symmetry: mean #{null: W >= t} matches mean #{null: W <= -t}.
  for (int kind = 0; kind < 3; ++kind) {
    std::vector<double> mags;
    for (int t = 0; t < trials; ++t)
      for (int j = k; j < p; ++j)
        if (w_all[kind](t, j) != 0.0)
          mags.push_back(std::abs(w_all[kind](t, j)));
    std::sort(mags.begin(), mags.end());
    REQUIRE(!mags.empty());
    for (double qtl : {0.2, 0.5, 0.8}) {
      double thr = mags[size_t(qtl * (mags.size() - 1))];
      double sum_diff = 0.0, sum_sq = 0.0;
      for (int t = 0; t < trials; ++t) {
        int npos = 0, nneg = 0;
        for (int j = k; j < p; ++j) {
          if (w_all[kind](t, j) >= thr) ++npos;
          if (w_all[kind](t, j) <= -thr) ++nneg;
        }
        double diff = double(npos - nneg);
        sum_diff += diff;
        sum_sq += diff * diff;
      }
      double mean = sum_diff / trials;
      double var = std::max(0.0, sum_sq / trials - mean * mean);
      double se = std::sqrt(var / trials) + 1e-12;
      CAPTURE(kind);
      CAPTURE(thr);
      CHECK(std::abs(mean) <= 5.0 * se);
    }
  }
}

TEST_CASE("lasso_signmax_baseline masking behavior") {
  const int p = 12, n = 60;
  DesignEnsemble d = sample_design(CovarianceModel::identity(p), n, 137);
  PseudoKnockoff pk =
      construct_knockoff_baseline(d.x, d.sigma_hat, /*sdp=*/false, 1);
  VectorXd y = sample_response(d.x, sample_signal(p, 3, 3.5, 139).beta, 149);
  SplitCoefficients sp = least_squares_split(d.x, pk.xt, y);
  double lam = default_lambda(sp);

  // Equi s is far above the floor: no masking, matches floor = 0 run.
  REQUIRE(pk.s.minCoeff() >= 0.001);
  FeatureStatistics a = lasso_signmax_baseline(d.x, pk.xt, y, lam, pk.s);
  FeatureStatistics b =
      lasso_signmax_baseline(d.x, pk.xt, y, lam, pk.s, 0.0);
  CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.w.cwiseAbs().maxCoeff() > 0.0);

  // Half-masked s: masked coordinates give exactly zero W.
  VectorXd s2 = pk.s;
  for (int j = 0; j < p; j += 2) s2(j) = 1e-5;
  FeatureStatistics c = lasso_signmax_baseline(d.x, pk.xt, y, lam, s2);
  for (int j = 0; j < p; j += 2) CHECK(c.w(j) == 0.0);

  // Everything masked: W identically zero.
  FeatureStatistics z = lasso_signmax_baseline(
      d.x, pk.xt, y, lam, VectorXd::Constant(p, 1e-5));
  CHECK(z.w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lasso_signmax_baseline null signs symmetric on identity design") {
  const int p = 12, n = 60, k = 3, trials = 2000;
  DesignEnsemble d = sample_design(CovarianceModel::identity(p), n, 151);
  PseudoKnockoff pk =
      construct_knockoff_baseline(d.x, d.sigma_hat, /*sdp=*/false, 1);
  VectorXd beta = VectorXd::Zero(p);
  for (int j = 0; j < k; ++j) beta(j) = 3.5;

  long pos = 0, nonzero = 0;
  for (int t = 0; t < trials; ++t) {
    VectorXd y = sample_response(d.x, beta, hash_combine(157, t));
    double lam = default_lambda(least_squares_split(d.x, pk.xt, y));
    FeatureStatistics st = lasso_signmax_baseline(d.x, pk.xt, y, lam, pk.s);
    for (int j = k; j < p; ++j) {
      if (st.w(j) == 0.0) continue;
      ++nonzero;
      if (st.w(j) > 0.0) ++pos;
    }
  }
  REQUIRE(nonzero > 200);
  double phat = double(pos) / double(nonzero);
  CHECK(std::abs(phat - 0.5) <= 3.0 * std::sqrt(0.25 / double(nonzero)));
}
