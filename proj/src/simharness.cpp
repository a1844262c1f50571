#include "pseudoknockoff/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "pseudoknockoff/parallel.hpp"
#include "pseudoknockoff/rng.hpp"
#include "pseudoknockoff/select.hpp"

namespace pkf {
namespace {

// FNV-1a; keeps construction streams tied to the method identity instead
// of its position in the config, so reordering methods cannot change any
// per-method output.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sub-stream tags hung off the grid / trial seeds.
constexpr std::uint64_t kTagSignal = 1;
constexpr std::uint64_t kTagNoise = 2;
constexpr std::uint64_t kTagSupport = 3;

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9; }

}  // namespace

const char* sweep_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::sparsity: return "sparsity";
    case SweepVariable::amplitude: return "amplitude";
    case SweepVariable::correlation: return "correlation";
    case SweepVariable::scale: return "scale";
    case SweepVariable::within_group: return "within_group";
    case SweepVariable::between_group: return "between_group";
  }
  throw std::logic_error("unreachable sweep variable");
}

SweepVariable sweep_from_name(const std::string& name) {
  for (SweepVariable v :
       {SweepVariable::sparsity, SweepVariable::amplitude,
        SweepVariable::correlation, SweepVariable::scale,
        SweepVariable::within_group, SweepVariable::between_group}) {
    if (name == sweep_name(v)) return v;
  }
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

std::string MethodSpec::base_label() const {
  switch (method) {
    case Method::orthogonal: return "opk";
    case Method::block_diagonal: return "bdpk" + std::to_string(group_size);
    case Method::general: return "gpk_m" + std::to_string(m);
    case Method::knockoff_equi: return "ko_equi";
    case Method::knockoff_sdp: return "ko_sdp";
  }
  throw std::logic_error("unreachable method");
}

std::string MethodSpec::stat_name() const {
  switch (family) {
    case StatFamily::half_lasso: return stat_kind_name(kind);
    case StatFamily::least_squares: return "ls";
    case StatFamily::lasso_signmax: return "signmax";
  }
  throw std::logic_error("unreachable statistic family");
}

std::string MethodSpec::label() const { return base_label() + "_" + stat_name(); }

MethodSpec parse_method_label(const std::string& label) {
  const auto cut = label.rfind('_');
  if (cut == std::string::npos || cut == 0 || cut + 1 == label.size()) {
    throw std::invalid_argument("method label '" + label +
                                "' is not <construction>_<statistic>");
  }
  std::string base = label.substr(0, cut);
  const std::string stat = label.substr(cut + 1);
  // the general construction's label has a second underscore: gpk_m<k>
  if (base == "gpk" || base == "ko") {
    throw std::invalid_argument("method label '" + label +
                                "' is missing its statistic suffix");
  }

  MethodSpec spec;
  auto parse_int_suffix = [&](std::string_view text, int minimum) {
    int value = 0;
    size_t used = 0;
    try {
      value = std::stoi(std::string(text), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || value < minimum) {
      throw std::invalid_argument("method label '" + label +
                                  "': bad numeric suffix '" +
                                  std::string(text) + "'");
    }
    return value;
  };

  if (base == "opk") {
    spec.method = Method::orthogonal;
  } else if (base.rfind("bdpk", 0) == 0) {
    spec.method = Method::block_diagonal;
    spec.group_size =
        base.size() > 4 ? parse_int_suffix(std::string_view(base).substr(4), 1) : 5;
  } else if (base.rfind("gpk_m", 0) == 0) {
    spec.method = Method::general;
    spec.m = parse_int_suffix(std::string_view(base).substr(5), 1);
  } else if (base == "ko_equi") {
    spec.method = Method::knockoff_equi;
  } else if (base == "ko_sdp") {
    spec.method = Method::knockoff_sdp;
  } else {
    throw std::invalid_argument("unknown construction '" + base +
                                "' in method label '" + label + "'");
  }

  if (stat == "w1") {
    spec.family = StatFamily::half_lasso;
    spec.kind = StatKind::w1;
  } else if (stat == "w2") {
    spec.family = StatFamily::half_lasso;
    spec.kind = StatKind::w2;
  } else if (stat == "ls") {
    spec.family = StatFamily::least_squares;
  } else if (stat == "signmax") {
    spec.family = StatFamily::lasso_signmax;
    if (spec.method != Method::knockoff_equi &&
        spec.method != Method::knockoff_sdp) {
      throw std::invalid_argument(
          "method label '" + label +
          "': signmax needs a knockoff construction (it masks by s)");
    }
  } else {
    throw std::invalid_argument("unknown statistic '" + stat +
                                "' in method label '" + label + "'");
  }
  return spec;
}

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (cfg.p < 1) fail("config: p must be positive");
  if (cfg.n <= 2 * cfg.p) fail("config: n must exceed 2p");
  if (cfg.k < 0 || cfg.k > cfg.p) fail("config: k must lie in [0, p]");
  if (!(cfg.amplitude >= 0)) fail("config: amplitude must be >= 0");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) fail("config: q must lie in (0, 1)");
  if (cfg.trials < 1) fail("config: trials must be positive");
  if (cfg.grid.empty()) fail("config: sweep grid is empty");
  if (cfg.methods.empty()) fail("config: no methods given");
  if (cfg.cov == CovKind::group && cfg.group_size < 1) {
    fail("config: group covariance needs group_size >= 1");
  }
  if (cfg.cov == CovKind::group && cfg.p % cfg.group_size != 0) {
    fail("config: p must be a multiple of group_size");
  }

  switch (cfg.sweep) {
    case SweepVariable::sparsity:
    case SweepVariable::scale:
      for (double v : cfg.grid) {
        if (!is_integral(v) || v < (cfg.sweep == SweepVariable::scale ? 1 : 0)) {
          fail(std::string("config: ") + sweep_name(cfg.sweep) +
               " grid values must be nonnegative integers");
        }
      }
      break;
    case SweepVariable::correlation:
      if (cfg.cov == CovKind::identity || cfg.cov == CovKind::group) {
        fail("config: correlation sweep needs an ar or precision covariance");
      }
      break;
    case SweepVariable::within_group:
    case SweepVariable::between_group:
      if (cfg.cov != CovKind::group) {
        fail("config: group-correlation sweeps need the group covariance");
      }
      break;
    case SweepVariable::amplitude:
      break;
  }
  for (const MethodSpec& ms : cfg.methods) {
    (void)parse_method_label(ms.label());  // re-checks internal consistency
  }
}

GridPoint expand_grid_point(const ExperimentConfig& cfg, int index) {
  if (index < 0 || index >= int(cfg.grid.size())) {
    throw std::out_of_range("grid index out of range");
  }
  GridPoint pt;
  pt.index = index;
  pt.value = cfg.grid[size_t(index)];
  pt.n = cfg.n;
  pt.p = cfg.p;
  pt.k = cfg.k;
  pt.amplitude = cfg.amplitude;

  double rho = cfg.rho;
  double gamma = cfg.gamma;
  switch (cfg.sweep) {
    case SweepVariable::sparsity: pt.k = int(std::llround(pt.value)); break;
    case SweepVariable::amplitude: pt.amplitude = pt.value; break;
    case SweepVariable::correlation: rho = pt.value; break;
    case SweepVariable::scale: {
      const int l = int(std::llround(pt.value));
      pt.n = 150 * l;
      pt.p = 50 * l;
      pt.k = 10 * l;
      break;
    }
    case SweepVariable::within_group: rho = pt.value; break;
    case SweepVariable::between_group: gamma = pt.value; break;
  }

  switch (cfg.cov) {
    case CovKind::identity: pt.model = CovarianceModel::identity(pt.p); break;
    case CovKind::ar: pt.model = CovarianceModel::ar(pt.p, rho); break;
    case CovKind::group:
      if (pt.p % cfg.group_size != 0) {
        throw std::invalid_argument("grid point: p not a multiple of group_size");
      }
      pt.model = CovarianceModel::grouped(pt.p / cfg.group_size,
                                          cfg.group_size, rho, gamma);
      break;
    case CovKind::precision_a: pt.model = CovarianceModel::precision_a(pt.p, rho); break;
    case CovKind::precision_b: pt.model = CovarianceModel::precision_b(pt.p, rho); break;
    case CovKind::precision_c: pt.model = CovarianceModel::precision_c(pt.p, rho); break;
  }

  if (pt.n <= 2 * pt.p) {
    throw std::invalid_argument("grid point: n must exceed 2p");
  }
  if (pt.k < 0 || pt.k > pt.p) {
    throw std::invalid_argument("grid point: k must lie in [0, p]");
  }
  return pt;
}

namespace {

TrialRecord run_trial(const MethodSpec& ms, const Eigen::MatrixXd& x,
                      const PseudoKnockoff& pk, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& y, double q, const GridPoint& pt,
                      std::uint64_t tseed) {
  TrialRecord rec;
  rec.grid_index = pt.index;
  rec.grid_value = pt.value;
  rec.method = ms.base_label();
  rec.statistic = ms.stat_name();
  rec.seed = tseed;
  try {
    const SplitCoefficients split = least_squares_split(x, pk.xt, y);
    FeatureStatistics stats;
    switch (ms.family) {
      case StatFamily::half_lasso: {
        rec.lambda = default_lambda(split);
        const HalfLassoFit fit = half_lasso(x, pk.xt, y, rec.lambda);
        stats = make_statistic(fit.sum_coef, fit.diff_coef, ms.kind, rec.lambda);
        rec.sweeps = fit.sweeps;
        break;
      }
      case StatFamily::least_squares:
        stats = least_squares_statistic(split);
        break;
      case StatFamily::lasso_signmax:
        rec.lambda = default_lambda(split);
        stats = lasso_signmax_baseline(x, pk.xt, y, rec.lambda, pk.s);
        break;
    }
    const SelectionOutcome out = evaluate(stats.w, beta, q);
    rec.threshold = out.t;
    rec.n_selected = int(out.selected.size());
    rec.fdp = out.fdp;
    rec.power = out.power;
    rec.ratio_stat = out.ratio_stat;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  return rec;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult res;
  res.config = cfg;
  const int n_methods = int(cfg.methods.size());
  // (grid, method) pairs that produced no records still need summary rows.
  std::vector<std::pair<int, int>> dead;

  for (int g = 0; g < int(cfg.grid.size()); ++g) {
    const std::uint64_t gseed = hash_combine(cfg.seed, std::uint64_t(g));
    GridPoint pt;
    try {
      pt = expand_grid_point(cfg, g);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "grid " << g << " (value " << cfg.grid[size_t(g)]
          << "): " << e.what();
      res.errors.push_back(msg.str());
      for (int mi = 0; mi < n_methods; ++mi) dead.emplace_back(g, mi);
      continue;
    }

    const DesignEnsemble design = sample_design(pt.model, pt.n, gseed);
    std::vector<std::optional<PseudoKnockoff>> companions(
        static_cast<size_t>(n_methods));
    for (int mi = 0; mi < n_methods; ++mi) {
      const MethodSpec& ms = cfg.methods[size_t(mi)];
      ConstructOptions opts;
      opts.m = ms.m;
      opts.group_size = ms.group_size;
      opts.seed = hash_combine(gseed, fnv1a(ms.label()));
      try {
        companions[size_t(mi)] = construct_method(ms.method, design, opts);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "grid " << g << " (value " << pt.value << ") method "
            << ms.label() << ": " << e.what();
        res.errors.push_back(msg.str());
        dead.emplace_back(g, mi);
      }
    }

    std::vector<int> support;
    if (cfg.freeze_support) {
      support = sample_support(pt.p, pt.k, hash_combine(gseed, kTagSupport));
    }

    std::vector<std::optional<TrialRecord>> slots(size_t(cfg.trials) *
                                                  size_t(n_methods));
    parallel_for(cfg.trials, [&](std::int64_t t) {
      const std::uint64_t tseed =
          hash_combine(cfg.seed, std::uint64_t(g), std::uint64_t(t));
      const Signal sig =
          cfg.freeze_support
              ? sample_signal_on_support(support, pt.p, pt.amplitude,
                                         hash_combine(tseed, kTagSignal))
              : sample_signal(pt.p, pt.k, pt.amplitude,
                              hash_combine(tseed, kTagSignal));
      const Eigen::VectorXd y =
          sample_response(design.x, sig.beta, hash_combine(tseed, kTagNoise));
      for (int mi = 0; mi < n_methods; ++mi) {
        if (!companions[size_t(mi)]) continue;
        slots[size_t(t) * size_t(n_methods) + size_t(mi)] =
            run_trial(cfg.methods[size_t(mi)], design.x, *companions[size_t(mi)],
                      sig.beta, y, cfg.q, pt, tseed);
      }
    }, cfg.n_threads);

    for (const auto& slot : slots) {
      if (slot) res.trials.push_back(*slot);
    }
  }

  res.complete = res.errors.empty();
  if (!res.trials.empty()) res.summary = summarize(res.trials);

  // Splice in empty rows so every (grid, method) appears exactly once, in
  // grid-major method order.
  std::vector<SummaryRow> merged;
  size_t cursor = 0;
  auto emit_dead = [&](int g, int mi) {
    const MethodSpec& ms = cfg.methods[size_t(mi)];
    SummaryRow row;
    row.grid_index = g;
    row.grid_value = cfg.grid[size_t(g)];
    row.method = ms.base_label();
    row.statistic = ms.stat_name();
    row.n_failed = cfg.trials;
    merged.push_back(row);
  };
  size_t next_dead = 0;
  for (int g = 0; g < int(cfg.grid.size()); ++g) {
    for (int mi = 0; mi < n_methods; ++mi) {
      if (next_dead < dead.size() && dead[next_dead] == std::make_pair(g, mi)) {
        emit_dead(g, mi);
        ++next_dead;
      } else {
        if (cursor >= res.summary.size()) {
          throw std::logic_error("summary row bookkeeping out of sync");
        }
        merged.push_back(res.summary[cursor++]);
      }
    }
  }
  res.summary = std::move(merged);
  return res;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("summarize: no records");
  }
  struct Bucket {
    SummaryRow row;
    std::vector<double> fdp, power, ratio, selected, lambda;
  };
  std::vector<Bucket> buckets;
  std::map<std::tuple<int, std::string, std::string>, size_t> index;
  for (const TrialRecord& rec : records) {
    const auto key = std::make_tuple(rec.grid_index, rec.method, rec.statistic);
    auto [it, fresh] = index.emplace(key, buckets.size());
    if (fresh) {
      buckets.emplace_back();
      Bucket& b = buckets.back();
      b.row.grid_index = rec.grid_index;
      b.row.grid_value = rec.grid_value;
      b.row.method = rec.method;
      b.row.statistic = rec.statistic;
    }
    Bucket& b = buckets[it->second];
    if (rec.failed) {
      b.row.n_failed += 1;
      continue;
    }
    b.row.n_ok += 1;
    b.fdp.push_back(rec.fdp);
    b.power.push_back(rec.power);
    b.ratio.push_back(rec.ratio_stat);
    b.selected.push_back(double(rec.n_selected));
    b.lambda.push_back(rec.lambda);
  }

  auto mean_se = [](const std::vector<double>& xs, double& mean, double& se) {
    mean = 0.0;
    se = 0.0;
    if (xs.empty()) return;
    for (double v : xs) mean += v;
    mean /= double(xs.size());
    if (xs.size() < 2) return;  // single sample: SE = 0 convention
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  };

  std::vector<SummaryRow> rows;
  rows.reserve(buckets.size());
  for (Bucket& b : buckets) {
    double unused;
    mean_se(b.fdp, b.row.fdr, b.row.fdr_se);
    mean_se(b.power, b.row.power, b.row.power_se);
    mean_se(b.ratio, b.row.ratio, b.row.ratio_se);
    mean_se(b.selected, b.row.mean_selected, unused);
    mean_se(b.lambda, b.row.mean_lambda, unused);
    rows.push_back(b.row);
  }
  return rows;
}

}  // namespace pkf
