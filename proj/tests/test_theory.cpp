#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pseudoknockoff/construct.hpp"
#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/parallel.hpp"
#include "pseudoknockoff/rng.hpp"
#include "pseudoknockoff/theory.hpp"

using Eigen::VectorXd;
using namespace pkf;

namespace {

constexpr double kPi = 3.141592653589793;

// Direct product-form evaluation of the slice bound; overflows for large
// arguments, so callers keep the tuple ranges moderate.
double slice_bound_direct(double x, double y, double t, double xi, double s) {
  auto ch = [](double z) { return 0.5 * (std::exp(z) + std::exp(-z)); };
  return std::exp(-xi * (0.5 * (t * x - y) + s)) *
         std::pow(ch(0.5 * (1.0 + t) * xi), x) * std::pow(ch(0.5 * xi), y - x);
}

// Full-scan oracle for the grid minimum.
double grid_min_scan(double x, double y, double t, double s, double step) {
  const double xs = xi_star(x, y, t, s);
  const double lo = xs / 3.0;
  const int n = int(std::floor((3.0 * xs - lo) / step)) + 1;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    best = std::min(best, log_slice_bound(x, y, t, lo + j * step, s));
  }
  return std::exp(best);
}

// P(Bin(n, 1/2) >= k) by log-binomial summation.
double binom_tail_ge(int n, int k) {
  double sum = 0.0;
  for (int i = std::max(k, 0); i <= n; ++i) {
    sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                    std::lgamma(n - i + 1.0) - n * std::log(2.0));
  }
  return sum;
}

// Exact expectation of stat(signs) over every sign pattern of a small
// model (2^base patterns, uniform).
template <typename F>
double enumerate_expectation(const NullSignModel& model, F stat) {
  const bool copies = model.coupling == SignCoupling::copies;
  const int base = copies ? model.group_sizes.front() : model.total();
  const int reps = copies ? model.m() : 1;
  REQUIRE(base <= 20);
  std::vector<std::int8_t> signs(size_t(model.total()));
  double sum = 0.0;
  for (long mask = 0; mask < (1L << base); ++mask) {
    for (int b = 0; b < base; ++b) {
      const std::int8_t s = ((mask >> b) & 1) ? 1 : -1;
      std::fill_n(signs.begin() + ptrdiff_t(b) * reps, reps, s);
    }
    sum += stat(signs);
  }
  return sum / double(1L << base);
}

double ratio_stat(const std::vector<std::int8_t>& signs, double m) {
  std::int64_t pos = 0;
  for (auto s : signs) pos += s > 0;
  return double(pos) / (double(std::int64_t(signs.size()) - pos) + m);
}

double sup_stat(const std::vector<std::int8_t>& signs, double m) {
  std::int64_t pos = 0, neg = 0;
  double sup = 0.0;
  for (auto s : signs) {
    (s > 0 ? pos : neg) += 1;
    sup = std::max(sup, double(pos) / (double(neg) + m));
  }
  return sup;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the recurrence).
void gauss_legendre(int n, std::vector<double>& xs, std::vector<double>& ws) {
  xs.assign(size_t(n), 0.0);
  ws.assign(size_t(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    xs[size_t(i)] = -x;
    xs[size_t(n - 1 - i)] = x;
    ws[size_t(i)] = ws[size_t(n - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// Positive-quadrant mass of the standard bivariate normal via quadrature.
double orthant_quadrature(double mu) {
  static std::vector<double> xs, ws;
  if (xs.empty()) gauss_legendre(96, xs, ws);
  const double limit = 9.0;  // truncation error ~ exp(-40), far below 1e-6
  const double det = 1.0 - mu * mu;
  const double norm = 1.0 / (2.0 * kPi * std::sqrt(det));
  double total = 0.0;
  for (size_t a = 0; a < xs.size(); ++a) {
    const double u = 0.5 * limit * (xs[a] + 1.0);
    for (size_t b = 0; b < xs.size(); ++b) {
      const double v = 0.5 * limit * (xs[b] + 1.0);
      total += ws[a] * ws[b] *
               std::exp(-(u * u - 2.0 * mu * u * v + v * v) / (2.0 * det));
    }
  }
  return total * norm * 0.25 * limit * limit;
}

}  // namespace

TEST_CASE("slice bound: unit value in the zero-rate limit") {
  CHECK(slice_bound(3.0, 7.0, 2.4, 1e-300, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log_slice_bound(12.0, 40.0, 5.0, 0.0, 33.0) == 0.0);
}

TEST_CASE("slice bound: log-space evaluation matches the direct product") {
  CounterRng rng(2024);
  int checked = 0;
  while (checked < 1000) {
    const double x = 30.0 * rng.next_double();
    const double y = x + 25.0 * rng.next_double();
    const double t = 1.1 + 7.0 * rng.next_double();
    const double xi = 0.01 + 1.5 * rng.next_double();
    const double s = 40.0 * rng.next_double();
    const double direct = slice_bound_direct(x, y, t, xi, s);
    if (!std::isfinite(direct) || direct < 1e-280) continue;
    const double logged = slice_bound(x, y, t, xi, s);
    CHECK(logged == doctest::Approx(direct).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("slice bound: decreasing in x and s, increasing in y") {
  CounterRng rng(77);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = 0.1 + 80.0 * rng.next_double();
    const double y = x + 0.1 + 60.0 * rng.next_double();
    const double t = 1.1 + 10.0 * rng.next_double();
    const double xi = 0.01 + 2.0 * rng.next_double();
    const double s = 100.0 * rng.next_double();
    const double ref = log_slice_bound(x, y, t, xi, s);
    const double dx = std::min(0.5, y - x);
    CHECK(log_slice_bound(x + dx, y, t, xi, s) <= ref + 1e-9);
    CHECK(log_slice_bound(x, y + 0.7, t, xi, s) >= ref - 1e-9);
    CHECK(log_slice_bound(x, y, t, xi, s + 0.3) <= ref + 1e-9);
  }
}

TEST_CASE("slice bound: unit-width slices collapse to the geometric form") {
  // B(i, i+1, t, xi, t) = (e^xi + 1)/2 * e^{-t xi} * ((e^xi + e^{-t xi})/2)^i
  for (double t : {2.4, 6.0, 15.0}) {
    for (double xi : {0.2, 0.5}) {
      const double r = 0.5 * (std::exp(xi) + std::exp(-t * xi));
      const double logc = std::log(0.5 * (std::exp(xi) + 1.0));
      for (double i : {0.0, 1.0, 5.0, 150.0, 700.0}) {
        const double expected = logc - t * xi + i * std::log(r);
        CHECK(log_slice_bound(i, i + 1.0, t, xi, t) ==
              doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("xi_star: closed form and failure mode") {
  CHECK(xi_star(0.0, 1.0, 2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(xi_star(0.0, 0.0, 2.0, 1.0), std::invalid_argument);

  // Minimizes the Gaussian relaxation: value below both neighbors.
  CounterRng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = 5.0 + 50.0 * rng.next_double();
    const double y = x + 1.0 + 20.0 * rng.next_double();
    const double t = 1.5 + 8.0 * rng.next_double();
    const double s = x;  // shift comparable to the slice start
    const double star = xi_star(x, y, t, s);
    auto relax = [&](double xi) {
      return -xi * (0.5 * (t * x - y) + s) +
             xi * xi * ((y - x) + (1.0 + t) * (1.0 + t) * x) / 8.0;
    };
    CHECK(relax(star) <= relax(star + 1e-3) + 1e-12);
    CHECK(relax(star) <= relax(star - 1e-3) + 1e-12);
  }
}

TEST_CASE("grid minimum equals the full-scan oracle") {
  CounterRng rng(31);
  for (int rep = 0; rep < 2000; ++rep) {
    const double t = 2.4 + 12.6 * rng.next_double();
    const double eta = t < 4.0 ? t * t : t;
    const double start = eta * (1.0 + 25.0 * rng.next_double());
    if (start > 150.0) continue;
    // widths up to the largest greedy candidate step
    const double width =
        (0.05 + 0.9 * rng.next_double()) * (t - 1.0) * start * 19.0 / 20.0;
    const double fast = min_slice_bound_on_grid(start, start + width, t, eta);
    const double scan = grid_min_scan(start, start + width, t, eta, 0.01);
    CHECK(fast == doctest::Approx(scan).epsilon(1e-13));
  }
}

TEST_CASE("hoeffding tail: limit value, domination, monte carlo") {
  CHECK(hoeffding_tail(1.0, 1.0, 1.0 + 1e-12) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK_THROWS_AS(hoeffding_tail(10.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hoeffding_tail(0.0, 1.0, 2.0), std::invalid_argument);

  // V+/(V- + 1) > 2 at i = 200 is exactly V+ >= 135 for fair signs.
  const double exact = binom_tail_ge(200, 135);
  const double bound = hoeffding_tail(200.0, 1.0, 2.0);
  CHECK(exact <= bound);
  CHECK(bound < 1e-4);

  CounterRng rng(99);
  std::int64_t hits = 0;
  const std::int64_t trials = 100000;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    int pos = 0;
    for (int k = 0; k < 200; ++k) pos += int(rng.next_u64() & 1u);
    hits += pos >= 135;
  }
  const double freq = double(hits) / double(trials);
  const double se = std::sqrt(std::max(freq, 1e-9) * (1.0 - freq) / double(trials));
  CHECK(freq <= bound + 3.0 * se);
}

TEST_CASE("per-threshold bound: structure across regimes") {
  const ThresholdBound low = bound_at_t(2.5);
  CHECK(low.base == 0.5);
  CHECK(low.n_slices >= 1);
  CHECK(low.last_s > 150.0);
  CHECK(low.tail > 0.0);
  CHECK(low.bound <= 1.0);
  CHECK(low.bound == doctest::Approx(std::min(
      1.0, low.base + low.slice_sum + low.tail)));

  const ThresholdBound just_below = bound_at_t(3.999);
  const ThresholdBound at_split = bound_at_t(4.0);
  CHECK(just_below.base == 0.5);
  CHECK(at_split.base == 0.0);

  // Past the grid end the bound is closed form.
  const double t = 20.0, xi = 0.5;
  const double r = 0.5 * (std::exp(xi) + std::exp(-t * xi));
  const ThresholdBound far = bound_at_t(t);
  CHECK(far.n_slices == 0);
  CHECK(far.bound == doctest::Approx(0.5 * (std::exp(xi) + 1.0) *
                                     std::exp(-t * xi) * std::pow(r, t) /
                                     (1.0 - r)).epsilon(1e-12));

  CHECK_THROWS_AS(bound_at_t(0.9), std::invalid_argument);
  BoundPlan bad;
  bad.slice_stop = 10.0;
  CHECK_THROWS_AS(bound_at_t(5.0, bad), std::invalid_argument);
}

TEST_CASE("per-threshold bound dominates simulated sup exceedance") {
  // One group of fair signs (m = 1): empirical P(sup > t) must sit below
  // the certificate at t.  Truncating the prefix scan only lowers the
  // empirical frequency, so the comparison stays one-sided.
  CounterRng root(2717);
  for (double t : {3.0, 5.0}) {
    const double cap = bound_at_t(t).bound;
    const std::int64_t trials = 20000;
    std::int64_t hits = 0;
    for (std::int64_t trial = 0; trial < trials; ++trial) {
      CounterRng rng = root.substream(std::uint64_t(trial) * 131 + std::uint64_t(t));
      std::int64_t pos = 0, neg = 0;
      bool hit = false;
      for (int i = 0; i < 600 && !hit; ++i) {
        ((rng.next_u64() & 1u) ? pos : neg) += 1;
        hit = double(pos) > t * (double(neg) + 1.0);
      }
      hits += hit;
    }
    const double freq = double(hits) / double(trials);
    const double se = std::sqrt(std::max(freq, 1e-9) * (1.0 - freq) / double(trials));
    CHECK(freq <= cap + 3.0 * se);
  }
}

TEST_CASE("certificate: envelope, arithmetic identities, headline value") {
  const BoundCertificate cert = sup_bound_pipeline();
  CHECK(cert.points.size() == 2521);
  CHECK(cert.points.front().t == doctest::Approx(2.4));
  CHECK(cert.points.back().t == doctest::Approx(15.0));

  for (size_t i = 1; i < cert.envelope.size(); ++i) {
    CHECK(cert.envelope[i] <= cert.envelope[i - 1]);
    CHECK(cert.envelope[i] <= cert.points[i].bound);
  }
  CHECK(cert.envelope.front() <= 1.0);

  CHECK(cert.tail_ratio_grid ==
        doctest::Approx(0.5 * (std::exp(0.2) + std::exp(-2.4 * 0.2))).epsilon(1e-12));
  CHECK(cert.tail_ratio_grid < 0.93);
  CHECK(cert.tail_ratio_large < 0.83);

  CHECK(cert.constant ==
        doctest::Approx(2.4 + cert.grid_integral + cert.large_t_integral).epsilon(1e-13));
  // Left- and right-endpoint sums of a non-increasing envelope telescope.
  CHECK(cert.constant_upper - cert.constant ==
        doctest::Approx(0.005 * (cert.envelope.front() - cert.envelope.back()))
            .epsilon(1e-8));

  CHECK(cert.constant <= 3.9);
  // Regression pins: recorded from the frozen plan constants.
  CHECK(cert.constant == doctest::Approx(3.8950).epsilon(2e-4));
  CHECK(cert.constant_upper == doctest::Approx(3.9000).epsilon(2e-4));
  CHECK(cert.large_t_integral < 1e-3);
}

TEST_CASE("certificate: identical across worker counts") {
  BoundPlan one;
  one.n_threads = 1;
  BoundPlan three;
  three.n_threads = 3;
  const BoundCertificate a = sup_bound_pipeline(one);
  const BoundCertificate b = sup_bound_pipeline(three);
  CHECK(a.constant == b.constant);
  CHECK(a.grid_integral_upper == b.grid_integral_upper);
  for (size_t i = 0; i < a.points.size(); i += 97) {
    CHECK(a.points[i].bound == b.points[i].bound);
  }
}

TEST_CASE("null sign model: constructor contracts") {
  CHECK_THROWS_AS(NullSignModel({}, SignCoupling::independent), std::invalid_argument);
  CHECK_THROWS_AS(NullSignModel({3, 0}, SignCoupling::independent), std::invalid_argument);
  CHECK_THROWS_AS(NullSignModel({4}, SignCoupling::independent, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(NullSignModel({4}, SignCoupling::independent, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NullSignModel({3, 4}, SignCoupling::copies), std::invalid_argument);
  const NullSignModel ok({5, 5, 5}, SignCoupling::copies);
  CHECK(ok.m() == 3);
  CHECK(ok.total() == 15);
}

TEST_CASE("null sign model: copies repeat each underlying sign m times") {
  const NullSignModel model({4, 4, 4}, SignCoupling::copies);
  CounterRng rng(11);
  std::vector<std::int8_t> signs;
  for (int rep = 0; rep < 50; ++rep) {
    model.sample_signs(rng, signs);
    REQUIRE(signs.size() == 12);
    for (int block = 0; block < 4; ++block) {
      CHECK(signs[size_t(block * 3)] == signs[size_t(block * 3 + 1)]);
      CHECK(signs[size_t(block * 3)] == signs[size_t(block * 3 + 2)]);
    }
  }
}

TEST_CASE("fixed-threshold ratio expectation matches exact enumeration") {
  struct Case {
    NullSignModel model;
    double exact;
  };
  const std::vector<Case> cases = {
      {NullSignModel({2}, SignCoupling::independent), 0.75},
      {NullSignModel({5}, SignCoupling::independent), 1.0 - std::pow(2.0, -5)},
      {NullSignModel({1, 1}, SignCoupling::independent), 5.0 / 12.0},
      {NullSignModel({3, 3}, SignCoupling::copies), 7.0 / 8.0},
  };
  for (const auto& c : cases) {
    const double m = c.model.m();
    const double enumerated = enumerate_expectation(
        c.model, [&](const std::vector<std::int8_t>& s) { return ratio_stat(s, m); });
    CHECK(enumerated == doctest::Approx(c.exact).epsilon(1e-12));
    const McEstimate est = mc_fixed_t_expectation(c.model, 40000, 424242);
    CHECK(est.se > 0.0);
    CHECK(std::abs(est.estimate - c.exact) <= 3.0 * est.se + 1e-12);
  }
  CHECK_THROWS_AS(
      mc_fixed_t_expectation(cases[0].model, 1, 0), std::invalid_argument);
}

TEST_CASE("sup ratio expectation matches exact enumeration on small models") {
  const NullSignModel iid2({2}, SignCoupling::independent);
  const NullSignModel cop22({2, 2}, SignCoupling::copies);
  const double iid2_exact = enumerate_expectation(
      iid2, [&](const std::vector<std::int8_t>& s) { return sup_stat(s, 1.0); });
  const double cop22_exact = enumerate_expectation(
      cop22, [&](const std::vector<std::int8_t>& s) { return sup_stat(s, 2.0); });
  CHECK(iid2_exact == doctest::Approx(0.875).epsilon(1e-12));
  CHECK(cop22_exact == doctest::Approx(0.875).epsilon(1e-12));

  const McEstimate a = mc_sup_ratio(iid2, 40000, 7);
  CHECK(std::abs(a.estimate - iid2_exact) <= 3.0 * a.se);
  const McEstimate b = mc_sup_ratio(cop22, 40000, 8);
  CHECK(std::abs(b.estimate - cop22_exact) <= 3.0 * b.se);
}

TEST_CASE("sup ratio stays under the certified constants") {
  // Independent signs, one group: the classical selective-inference
  // constant 1.93 applies.  Adversarial coupling (five identical copies):
  // only the uniform 3.9 certificate applies.
  const McEstimate iid = mc_sup_ratio(
      NullSignModel({500}, SignCoupling::independent), 20000, 515151);
  CHECK(iid.estimate <= 1.93 + 3.0 * iid.se);

  const McEstimate adversarial = mc_sup_ratio(
      NullSignModel(std::vector<int>(5, 100), SignCoupling::copies), 20000, 626262);
  CHECK(adversarial.estimate <= 3.9 + 3.0 * adversarial.se);
}

TEST_CASE("simulated moment generating function obeys the product bound") {
  const double t = 2.0, theta = 0.1;

  // m = 1: independence makes the bound an equality.
  const NullSignModel iid({60}, SignCoupling::independent);
  const McEstimate e1 = mc_mgf(iid, t, theta, 20, 50, 40000, 90001);
  const double b1 = mgf_product_bound(t, theta, 20, 50, 1);
  CHECK(std::abs(e1.estimate - b1) <= 5.0 * e1.se);

  // copies with i, j multiples of m: equality again.
  const NullSignModel cop({20, 20, 20}, SignCoupling::copies);
  const McEstimate e2 = mc_mgf(cop, t, theta, 30, 60, 40000, 90002);
  const double b2 = mgf_product_bound(t, theta, 30, 60, 3);
  CHECK(std::abs(e2.estimate - b2) <= 5.0 * e2.se);

  // off the multiples the decoupling is one-sided.
  const McEstimate e3 = mc_mgf(cop, t, theta, 31, 59, 40000, 90003);
  const double b3 = mgf_product_bound(t, theta, 31, 59, 3);
  CHECK(e3.estimate <= b3 + 5.0 * e3.se);

  CHECK_THROWS_AS(mc_mgf(iid, t, theta, 50, 20, 100, 0), std::invalid_argument);
  CHECK_THROWS_AS(mc_mgf(iid, t, 0.0, 10, 20, 100, 0), std::invalid_argument);
  CHECK_THROWS_AS(mc_mgf(iid, t, theta, 10, 61, 100, 0), std::invalid_argument);
}

TEST_CASE("orthant probability: special values and quadrature") {
  CHECK(orthant_prob(0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(orthant_prob(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(orthant_prob(-1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(orthant_prob(1.0 + 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(orthant_prob(std::nan("")), std::invalid_argument);

  for (int k = 0; k < 21; ++k) {
    const double mu = -0.95 + k * 0.095;
    CHECK(orthant_prob(mu) == doctest::Approx(orthant_quadrature(mu)).epsilon(1e-6));
  }
}

TEST_CASE("sign covariance bound holds on a dense correlation grid") {
  std::vector<double> grid;
  for (double mu = -0.999; mu <= 0.999 + 1e-12; mu += 0.002) grid.push_back(mu);
  grid.push_back(1.0);
  grid.push_back(-1.0);
  CHECK(lemma_cov_bound_check(grid) <= 1e-12);

  // The checker must actually detect violations: weaken the quadratic
  // coefficient far below the certified 3/2 and the high-correlation end
  // breaks by a visible margin.
  CHECK(lemma_cov_bound_check(grid, 0.05) > 0.01);
  CHECK_THROWS_AS(lemma_cov_bound_check({1.5}), std::invalid_argument);
}

TEST_CASE("orthogonal-companion exceedance bound on an identity design") {
  const DesignEnsemble d = sample_design(CovarianceModel::identity(24), 90, 1311);
  const PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 17);
  const VectorXd y = sample_response(d.x, VectorXd::Zero(24), 1312);

  const OrtBoundReport rep =
      thm_ort_bound_check(d.x, pk.xt, y, 4000, {0.3, 0.6}, {8, 16}, 4242);
  CHECK(rep.pass);
  CHECK(rep.lambda_below_j);
  CHECK(rep.var_within_cap);
  REQUIRE(rep.cells.size() == 4);
  for (const auto& cell : rep.cells) {
    CHECK(cell.pass);
    CHECK(cell.lambda_max > 0.0);
    CHECK(cell.lambda_max < cell.j);
    CHECK(cell.bound == doctest::Approx((1.0 + 3.0 * kPi) * cell.lambda_max /
                                        (kPi * cell.delta * cell.delta * cell.j)));
    CHECK(cell.freq <= cell.bound + 3.0 * cell.se);
  }
  REQUIRE(rep.var_vplus.size() == 2);
  CHECK(rep.var_cap[0] == doctest::Approx(2.0 * (1.0 / (2.0 * kPi) + 1.5) * 8.0));
  // Near-independent signs: variance about j/4, far under the cap.
  CHECK(rep.var_vplus[0] < rep.var_cap[0]);
}

TEST_CASE("orthogonal-companion exceedance bound on a correlated design") {
  const DesignEnsemble d = sample_design(CovarianceModel::ar(40, 0.5), 140, 808);
  const PseudoKnockoff pk = construct_orthogonal(d.x, d.sigma_hat, 18);
  const VectorXd y = sample_response(d.x, VectorXd::Zero(40), 809);
  const OrtBoundReport rep =
      thm_ort_bound_check(d.x, pk.xt, y, 4000, {0.4, 0.6}, {10, 30}, 5353);
  CHECK(rep.pass);
  CHECK(rep.var_within_cap);
}

TEST_CASE("orthogonal-companion check rejects bad inputs") {
  const DesignEnsemble d = sample_design(CovarianceModel::ar(16, 0.5), 60, 21);
  const PseudoKnockoff ort = construct_orthogonal(d.x, d.sigma_hat, 3);
  const PseudoKnockoff equi =
      construct_knockoff_baseline(d.x, d.sigma_hat, false, 4);
  const VectorXd y = sample_response(d.x, VectorXd::Zero(16), 22);

  CHECK_THROWS_AS(thm_ort_bound_check(d.x, equi.xt, y, 100, {0.5}, {4}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(thm_ort_bound_check(d.x, ort.xt, y, 100, {1.0}, {4}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(thm_ort_bound_check(d.x, ort.xt, y, 100, {0.5}, {0}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(thm_ort_bound_check(d.x, ort.xt, y, 100, {0.5}, {4, 4}, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(thm_ort_bound_check(d.x, ort.xt, y, 100, {0.5}, {17}, 0),
                  std::invalid_argument);
}

TEST_CASE("parallel_for: deterministic slots and error propagation") {
  auto fill = [](int n_threads) {
    std::vector<double> out(size_t(5000));
    const CounterRng root(33);
    parallel_for(5000, [&](std::int64_t i) {
      CounterRng rng = root.substream(std::uint64_t(i));
      out[size_t(i)] = rng.next_gaussian();
    }, n_threads);
    return out;
  };
  CHECK(fill(1) == fill(4));

  std::atomic<int> visited{0};
  CHECK_THROWS_AS(parallel_for(100, [&](std::int64_t i) {
    visited.fetch_add(1);
    if (i == 57) throw std::runtime_error("boom");
  }, 4), std::runtime_error);
  CHECK(visited.load() >= 1);
  parallel_for(0, [&](std::int64_t) { throw std::logic_error("unreachable"); });
}

TEST_CASE("monte carlo estimates identical across worker counts") {
  const NullSignModel model({40, 40}, SignCoupling::independent);
  const McEstimate a = mc_fixed_t_expectation(model, 5000, 616, 1);
  const McEstimate b = mc_fixed_t_expectation(model, 5000, 616, 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.se == b.se);
  const McEstimate c = mc_sup_ratio(model, 5000, 617, 1);
  const McEstimate d = mc_sup_ratio(model, 5000, 617, 3);
  CHECK(c.estimate == d.estimate);
  CHECK(c.se == d.se);
}
