#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pseudoknockoff/parallel.hpp"
#include "pseudoknockoff/theory.hpp"

namespace pkf {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// log(cosh(z)) without overflow: |z| - ln 2 + log1p(e^{-2|z|}).
double lcosh(double z) {
  z = std::abs(z);
  return z - kLn2 + std::log1p(std::exp(-2.0 * z));
}

// 1/cosh^2(z), evaluated through e^{-2|z|} so large z underflows to 0
// instead of overflowing.
double sech2(double z) {
  const double e = std::exp(-2.0 * std::abs(z));
  const double d = 1.0 + e;
  return 4.0 * e / (d * d);
}

// Geometric ratio of unit-width slices, r = (e^xi + e^{-t xi}) / 2.
double tail_ratio(double t, double xi) {
  return 0.5 * (std::exp(xi) + std::exp(-t * xi));
}

}  // namespace

double log_slice_bound(double x, double y, double t, double xi, double s) {
  return -xi * (0.5 * (t * x - y) + s) + x * lcosh(0.5 * (1.0 + t) * xi) +
         (y - x) * lcosh(0.5 * xi);
}

double slice_bound(double x, double y, double t, double xi, double s) {
  return std::exp(log_slice_bound(x, y, t, xi, s));
}

double xi_star(double x, double y, double t, double s) {
  const double den = y - x + (1.0 + t) * (1.0 + t) * x;
  if (!(den > 0.0)) {
    throw std::invalid_argument(
        "xi_star: relaxation minimizer undefined, y - x + (1+t)^2 x = " +
        std::to_string(den));
  }
  return (2.0 * (t * x - y) + 4.0 * s) / den;
}

double min_slice_bound_on_grid(double x, double y, double t, double s,
                               double step) {
  if (!(step > 0.0)) throw std::invalid_argument("min_slice_bound_on_grid: step must be positive");
  const double xs = xi_star(x, y, t, s);
  if (!(xs > 0.0)) {
    throw std::invalid_argument(
        "min_slice_bound_on_grid: xi grid is empty, xi* = " +
        std::to_string(xs));
  }
  const double lo = xs / 3.0;
  const double hi = 3.0 * xs;
  const int n = static_cast<int>(std::floor((hi - lo) / step)) + 1;

  // Stationary point of the log bound: g(xi) = 0 with
  //   g(xi) = -K + x a tanh(a xi) + (y-x)/2 tanh(xi/2),  a = (1+t)/2.
  // g is increasing and concave with g(xi*) <= 0 (tanh below its tangent),
  // so Newton from xi* climbs monotonically to the root.
  const double a = 0.5 * (1.0 + t);
  const double k = 0.5 * (t * x - y) + s;
  const double c = 0.5 * (y - x);
  double root = xs;
  bool located = false;
  for (int it = 0; it < 100; ++it) {
    const double g = -k + x * a * std::tanh(a * root) + c * std::tanh(0.5 * root);
    const double gp = x * a * a * sech2(a * root) + 0.5 * c * sech2(0.5 * root);
    if (!(gp > 0.0)) break;  // saturated: fall back to the full scan
    const double next = root - g / gp;
    if (!(next > 0.0)) break;
    if (std::abs(next - root) <= 1e-12 * std::max(1.0, root)) {
      root = next;
      located = true;
      break;
    }
    root = next;
  }

  double best = std::numeric_limits<double>::infinity();
  if (located) {
    // Convexity in xi makes the grid sequence unimodal: the minimum sits on
    // a grid neighbor of the root (or at a grid end when the root falls
    // outside).  Evaluating both neighbors and both ends covers every case.
    const long base = static_cast<long>(std::floor((root - lo) / step));
    const long probes[4] = {0, base, base + 1, n - 1};
    for (long j : probes) {
      const long jc = std::clamp<long>(j, 0, n - 1);
      best = std::min(best, log_slice_bound(x, y, t, lo + jc * step, s));
    }
  } else {
    for (int j = 0; j < n; ++j) {
      best = std::min(best, log_slice_bound(x, y, t, lo + j * step, s));
    }
  }
  return std::exp(best);
}

double hoeffding_tail(double i, double m, double t) {
  if (!(t > 1.0)) throw std::invalid_argument("hoeffding_tail: requires t > 1");
  if (!(i > 0.0) || !(m > 0.0)) {
    throw std::invalid_argument("hoeffding_tail: requires i > 0 and m > 0");
  }
  const double margin = ((t - 1.0) * i + 2.0 * t * m) / (2.0 * (1.0 + t));
  return std::exp(-margin * margin * 2.0 / (m * i));
}

namespace {

void validate_plan(const BoundPlan& plan) {
  if (!(plan.t_min > 1.0) || !(plan.t_max > plan.t_min)) {
    throw std::invalid_argument("BoundPlan: need 1 < t_min < t_max");
  }
  if (!(plan.t_step > 0.0) || !(plan.xi_grid_step > 0.0)) {
    throw std::invalid_argument("BoundPlan: steps must be positive");
  }
  if (plan.n_candidates < 1 || plan.lookahead_slices < 1) {
    throw std::invalid_argument("BoundPlan: candidate counts must be >= 1");
  }
  const double start_max =
      std::max(plan.regime_split * plan.regime_split, plan.t_max);
  if (!(plan.slice_stop > start_max)) {
    throw std::invalid_argument(
        "BoundPlan: slice_stop must exceed every slicing start point");
  }
  if (!(plan.tail_xi > 0.0) || !(plan.large_t_xi > 0.0)) {
    throw std::invalid_argument("BoundPlan: tail rates must be positive");
  }
}

// Geometric remainder covering positions beyond slice_stop:
//   sum_{i >= slice_stop} (e^xi + 1)/2 e^{-t xi} r^i,  r = tail_ratio(t, xi).
double geometric_remainder(double t, double xi, double from) {
  const double r = tail_ratio(t, xi);
  if (!(r < 1.0)) {
    throw std::runtime_error(
        "bound_at_t: geometric tail ratio >= 1 at t = " + std::to_string(t));
  }
  const double c = 0.5 * (std::exp(xi) + 1.0);
  return c * std::exp(-t * xi) * std::pow(r, from) / (1.0 - r);
}

}  // namespace

ThresholdBound bound_at_t(double t, const BoundPlan& plan) {
  validate_plan(plan);
  if (!(t > 1.0)) throw std::invalid_argument("bound_at_t: requires t > 1");

  ThresholdBound out;
  out.t = t;

  if (t > plan.t_max) {
    // Unit-width slices starting at t collapse to a closed form:
    // sum_{i>=1} c e^{-t xi} r^{t+i-1} = c e^{-t xi} r^t / (1 - r).
    const double xi = plan.large_t_xi;
    const double r = tail_ratio(t, xi);
    if (!(r < 1.0)) {
      throw std::runtime_error("bound_at_t: tail ratio >= 1 past t_max");
    }
    out.tail = 0.5 * (std::exp(xi) + 1.0) * std::exp(-t * xi) *
               std::pow(r, t) / (1.0 - r);
    out.bound = std::min(1.0, out.tail);
    out.last_s = t;
    return out;
  }

  // Below regime_split the first ~2tm positions are discarded against the
  // symmetric event (probability exactly 1/2) and slicing starts at t^2;
  // above it slicing starts at t directly.
  const bool small_t = t < plan.regime_split;
  const double eta = small_t ? t * t : t;
  out.base = small_t ? 0.5 : 0.0;

  double s_k = eta;
  while (s_k <= plan.slice_stop) {
    const double h = (t - 1.0) * s_k / (plan.n_candidates + 1);
    // Greedy lookahead: score candidate s by the cost of covering the next
    // lookahead_slices arithmetic slices of width s - s_k, then step to the
    // cheapest candidate.
    double best_score = std::numeric_limits<double>::infinity();
    double best_s = s_k + h;
    for (int i = 1; i <= plan.n_candidates; ++i) {
      const double width = i * h;
      double score = 0.0;
      for (int l = 1; l <= plan.lookahead_slices; ++l) {
        score += min_slice_bound_on_grid(s_k + (l - 1) * width,
                                         s_k + l * width, t, eta,
                                         plan.xi_grid_step);
        if (score >= best_score) break;  // sums only grow: safe to prune
      }
      if (score < best_score) {
        best_score = score;
        best_s = s_k + width;
      }
    }
    out.slice_sum +=
        min_slice_bound_on_grid(s_k, best_s, t, eta, plan.xi_grid_step);
    out.n_slices += 1;
    s_k = best_s;
  }
  out.last_s = s_k;

  out.tail = geometric_remainder(t, plan.tail_xi, plan.slice_stop);
  out.bound = std::min(1.0, out.base + out.slice_sum + out.tail);
  return out;
}

BoundCertificate sup_bound_pipeline(const BoundPlan& plan) {
  validate_plan(plan);

  const auto n_cells =
      static_cast<std::int64_t>(std::lround((plan.t_max - plan.t_min) / plan.t_step));
  if (n_cells < 1 ||
      std::abs(plan.t_min + static_cast<double>(n_cells) * plan.t_step - plan.t_max) > 1e-9) {
    throw std::invalid_argument(
        "sup_bound_pipeline: t_step must divide t_max - t_min");
  }

  BoundCertificate cert;
  cert.points.resize(static_cast<std::size_t>(n_cells) + 1);
  parallel_for(
      n_cells + 1,
      [&](std::int64_t i) {
        const double t = plan.t_min + static_cast<double>(i) * plan.t_step;
        cert.points[static_cast<std::size_t>(i)] = bound_at_t(t, plan);
      },
      plan.n_threads);

  // The true tail probability is non-increasing in t, so the running
  // minimum of the per-t bounds is still a valid per-t bound and is
  // non-increasing by construction.
  cert.envelope.resize(cert.points.size());
  double run = 1.0;
  for (std::size_t i = 0; i < cert.points.size(); ++i) {
    run = std::min(run, cert.points[i].bound);
    cert.envelope[i] = run;
  }
  // Headline sum charges each cell its right endpoint; the left-endpoint
  // variant dominates the integral cell by cell and is kept alongside.
  // They differ by at most t_step * (envelope front - envelope back).
  for (std::int64_t i = 0; i < n_cells; ++i) {
    const double t0 = plan.t_min + static_cast<double>(i) * plan.t_step;
    const double t1 = plan.t_min + static_cast<double>(i + 1) * plan.t_step;
    cert.grid_integral += cert.envelope[static_cast<std::size_t>(i + 1)] * (t1 - t0);
    cert.grid_integral_upper +=
        cert.envelope[static_cast<std::size_t>(i)] * (t1 - t0);
  }

  // Past t_max the per-t bound is c e^{-xi t} r(t)^t / (1 - r(t)) with
  // r(t) decreasing in t, so freezing r at t_max and integrating
  // e^{-(xi - ln r) t} in closed form stays one-sided.
  const double xi = plan.large_t_xi;
  const double r0 = tail_ratio(plan.t_max, xi);
  cert.tail_ratio_large = r0;
  const double rate = xi - std::log(r0);
  if (!(r0 < 1.0) || !(rate > 0.0)) {
    throw std::runtime_error("sup_bound_pipeline: divergent large-t remainder");
  }
  cert.large_t_integral = 0.5 * (std::exp(xi) + 1.0) / (1.0 - r0) *
                          std::exp(-rate * plan.t_max) / rate;

  cert.tail_ratio_grid = tail_ratio(plan.t_min, plan.tail_xi);
  cert.constant = plan.t_min + cert.grid_integral + cert.large_t_integral;
  cert.constant_upper =
      plan.t_min + cert.grid_integral_upper + cert.large_t_integral;
  cert.notes =
      "Slicing stops at the first endpoint beyond slice_stop; the geometric "
      "remainder is summed from slice_stop onward, so the overlap between the "
      "two is double-counted, which only loosens the bound. Per-slice values "
      "are kept exact and only the per-threshold total is clamped to 1. The "
      "headline constant charges each grid cell the running-min envelope at "
      "its right endpoint; constant_upper uses the left endpoint, which "
      "dominates the integral of a non-increasing envelope and exceeds the "
      "headline by at most t_step * (envelope front - envelope back).";
  return cert;
}

}  // namespace pkf
