#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pseudoknockoff/construct.hpp"
#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/matrix_io.hpp"
#include "pseudoknockoff/select.hpp"
#include "pseudoknockoff/simharness.hpp"
#include "pseudoknockoff/stats.hpp"
#include "pseudoknockoff/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 0 ok | 1 usage or input | 2 partial experiment failure | 3 verification failure
enum ExitCode { kOk = 0, kUsage = 1, kPartial = 2, kVerifyFail = 3 };

struct CheckList {
  json items = json::array();
  bool all_pass = true;

  void add(const std::string& name, double value, double bound,
           bool pass, const std::string& relation = "<=") {
    items.push_back({{"check", name},
                     {"value", value},
                     {"bound", bound},
                     {"relation", relation},
                     {"margin", bound - value},
                     {"pass", pass}});
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << "  value="
              << value << "  bound=" << bound << "\n";
  }
};

void write_certificate(const std::string& path, const std::string& kind,
                       const CheckList& checks, json extra = json::object()) {
  json doc;
  doc["schema_version"] = 1;
  doc["certificate"] = kind;
  doc["pass"] = checks.all_pass;
  doc["checks"] = checks.items;
  for (auto& [k, v] : extra.items()) doc[k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

int cmd_run(const std::string& config_path, const std::string& preset,
            const std::string& out_dir, bool seed_set, std::uint64_t seed,
            int jobs) {
  pkf::ExperimentConfig cfg;
  if (!preset.empty() && !config_path.empty()) {
    std::cerr << "error: give either --config or --preset, not both\n";
    return kUsage;
  }
  if (!preset.empty()) {
    cfg = pkf::preset_config(preset);
  } else if (!config_path.empty()) {
    cfg = pkf::experiment_config_from(pkf::load_config_file(config_path));
  } else {
    std::cerr << "error: run needs --config or --preset\n";
    return kUsage;
  }
  if (seed_set) cfg.seed = seed;
  cfg.n_threads = jobs;

  const pkf::ExperimentResult res = pkf::run_experiment(cfg);

  fs::create_directories(out_dir);
  pkf::write_trials_csv(res.trials, (fs::path(out_dir) / "trials.csv").string());
  pkf::write_summary_json(res, (fs::path(out_dir) / "summary.json").string());
  pkf::write_plotdata_csv(res, (fs::path(out_dir) / "plotdata").string());

  int failed_trials = 0;
  for (const pkf::SummaryRow& row : res.summary) {
    failed_trials += row.n_failed;
    std::cout << "grid=" << row.grid_value << " method=" << row.method << "_"
              << row.statistic << " fdr=" << row.fdr << " power=" << row.power
              << " ratio=" << row.ratio << " ok=" << row.n_ok
              << " failed=" << row.n_failed << "\n";
  }
  for (const std::string& err : res.errors) std::cerr << "error: " << err << "\n";
  std::cout << "artifacts written to " << out_dir << "\n";
  return (res.complete && failed_trials == 0) ? kOk : kPartial;
}

int cmd_construct_check(const std::string& out_path, std::uint64_t seed) {
  const int p = 60, n = 200;
  struct Fixture {
    const char* name;
    pkf::CovarianceModel model;
  };
  const Fixture fixtures[] = {
      {"identity", pkf::CovarianceModel::identity(p)},
      {"ar_0.5", pkf::CovarianceModel::ar(p, 0.5)},
      {"group_0.5", pkf::CovarianceModel::grouped(p / 5, 5, 0.5, 0.0)},
  };
  const char* methods[] = {"opk",    "bdpk5",  "gpk_m1", "gpk_m2",
                           "gpk_m5", "ko_equi", "ko_sdp"};

  CheckList checks;
  json details = json::array();
  for (const Fixture& fx : fixtures) {
    const pkf::DesignEnsemble design =
        pkf::sample_design(fx.model, n, pkf::hash_combine(seed, pkf::mix64(
            std::hash<std::string>{}(fx.name))));
    for (const char* mname : methods) {
      const pkf::MethodSpec spec =
          pkf::parse_method_label(std::string(mname) + "_w1");
      pkf::ConstructOptions opts;
      opts.m = spec.m;
      opts.group_size = spec.group_size;
      opts.seed = pkf::hash_combine(seed, 17);
      const pkf::PseudoKnockoff pk =
          pkf::construct_method(spec.method, design, opts);
      const pkf::ValidationReport rep =
          pkf::validate_construction(design.x, pk, design.sigma_hat);
      const double residual =
          std::max({rep.gram_match, rep.cross_orth, rep.var_identity,
                    rep.method_identity});
      checks.add(std::string(fx.name) + "/" + mname, residual, rep.tol,
                 rep.pass);
      details.push_back({{"fixture", fx.name},
                         {"method", mname},
                         {"gram_match", rep.gram_match},
                         {"cross_orth", rep.cross_orth},
                         {"var_identity", rep.var_identity},
                         {"method_identity", rep.method_identity},
                         {"tol", rep.tol},
                         {"pass", rep.pass}});
    }
  }
  if (!out_path.empty()) {
    write_certificate(out_path, "construct-check", checks,
                      {{"details", details}, {"p", p}, {"n", n}, {"seed", seed}});
  }
  return checks.all_pass ? kOk : kVerifyFail;
}

int cmd_verify_bounds(const std::string& out_path, int jobs) {
  pkf::BoundPlan plan;
  plan.n_threads = jobs;
  const pkf::BoundCertificate cert = pkf::sup_bound_pipeline(plan);

  CheckList checks;
  checks.add("uniform_ratio_constant", cert.constant, 3.9,
             cert.constant <= 3.9);
  checks.add("grid_tail_ratio", cert.tail_ratio_grid, 0.93,
             cert.tail_ratio_grid < 0.93, "<");
  checks.add("large_t_tail_ratio", cert.tail_ratio_large, 0.83,
             cert.tail_ratio_large < 0.83, "<");
  bool monotone = true;
  for (size_t i = 1; i < cert.envelope.size(); ++i) {
    monotone = monotone && cert.envelope[i] <= cert.envelope[i - 1];
  }
  checks.add("envelope_monotone", monotone ? 0.0 : 1.0, 0.0, monotone, "==");
  const double identity_gap = std::abs(
      cert.constant - (plan.t_min + cert.grid_integral + cert.large_t_integral));
  checks.add("constant_assembly_identity", identity_gap, 1e-12,
             identity_gap <= 1e-12);

  if (!out_path.empty()) {
    write_certificate(out_path, "verify-bounds", checks,
                      {{"constant", cert.constant},
                       {"constant_upper", cert.constant_upper},
                       {"grid_integral", cert.grid_integral},
                       {"grid_integral_upper", cert.grid_integral_upper},
                       {"large_t_integral", cert.large_t_integral},
                       {"grid_points", cert.points.size()},
                       {"notes", cert.notes}});
  }
  return checks.all_pass ? kOk : kVerifyFail;
}

int cmd_verify_mc(const std::string& out_path, std::uint64_t seed, int jobs) {
  using pkf::NullSignModel;
  using pkf::SignCoupling;
  CheckList checks;

  {  // exact enumeration anchors for the fixed-threshold expectation
    const auto est = pkf::mc_fixed_t_expectation(
        NullSignModel({2}, SignCoupling::independent), 100000, seed, jobs);
    checks.add("fixed_t_pair_enumeration",
               std::abs(est.estimate - 0.75), 3.0 * est.se,
               std::abs(est.estimate - 0.75) <= 3.0 * est.se);
  }
  {
    const auto est = pkf::mc_fixed_t_expectation(
        NullSignModel({1, 1}, SignCoupling::independent), 100000,
        pkf::hash_combine(seed, 2), jobs);
    checks.add("fixed_t_singletons_enumeration",
               std::abs(est.estimate - 5.0 / 12.0), 3.0 * est.se,
               std::abs(est.estimate - 5.0 / 12.0) <= 3.0 * est.se);
  }
  {  // worst-coupling fixed-threshold expectation stays under 1
    const auto est = pkf::mc_fixed_t_expectation(
        NullSignModel(std::vector<int>(5, 40), SignCoupling::copies), 100000,
        pkf::hash_combine(seed, 3), jobs);
    checks.add("fixed_t_copies_m5", est.estimate, 1.0 + 3.0 * est.se,
               est.estimate <= 1.0 + 3.0 * est.se);
  }
  {  // running-sup expectations against the certified constants
    const auto est = pkf::mc_sup_ratio(
        NullSignModel({500}, SignCoupling::independent), 10000,
        pkf::hash_combine(seed, 4), jobs);
    checks.add("sup_ratio_iid", est.estimate, 1.93 + 3.0 * est.se,
               est.estimate <= 1.93 + 3.0 * est.se);
  }
  {
    const auto est = pkf::mc_sup_ratio(
        NullSignModel(std::vector<int>(5, 40), SignCoupling::copies), 10000,
        pkf::hash_combine(seed, 5), jobs);
    checks.add("sup_ratio_copies_m5", est.estimate, 3.9 + 3.0 * est.se,
               est.estimate <= 3.9 + 3.0 * est.se);
  }
  {  // moment generating function: product bound is exact for independence
    const auto est = pkf::mc_mgf(NullSignModel({60}, SignCoupling::independent),
                                 2.0, 0.1, 20, 50, 40000,
                                 pkf::hash_combine(seed, 6), jobs);
    const double bound = pkf::mgf_product_bound(2.0, 0.1, 20, 50, 1);
    checks.add("mgf_product_equality", std::abs(est.estimate - bound),
               5.0 * est.se, std::abs(est.estimate - bound) <= 5.0 * est.se);
  }
  {  // sign-covariance inequality on a dense correlation grid
    std::vector<double> grid;
    for (int i = -999; i <= 999; ++i) grid.push_back(i / 1000.0);
    const double excess = pkf::lemma_cov_bound_check(grid);
    checks.add("sign_covariance_grid", excess, 1e-12, excess <= 1e-12);
  }
  {  // conditional exceedance bound for the orthogonal construction
    for (const char* name : {"identity", "ar_0.5"}) {
      const pkf::CovarianceModel model =
          std::string(name) == "identity" ? pkf::CovarianceModel::identity(60)
                                          : pkf::CovarianceModel::ar(60, 0.5);
      const pkf::DesignEnsemble d =
          pkf::sample_design(model, 200, pkf::hash_combine(seed, 7));
      const pkf::PseudoKnockoff pk =
          pkf::construct_orthogonal(d.x, d.sigma_hat, pkf::hash_combine(seed, 8));
      const Eigen::VectorXd y =
          pkf::sample_response(d.x, Eigen::VectorXd::Zero(60),
                               pkf::hash_combine(seed, 9));
      const pkf::OrtBoundReport rep = pkf::thm_ort_bound_check(
          d.x, pk.xt, y, 10000, {0.4, 0.6}, {10, 30},
          pkf::hash_combine(seed, 10), jobs);
      double worst = 0.0;
      for (const auto& cell : rep.cells) {
        worst = std::max(worst, cell.freq - (cell.bound + 3.0 * cell.se));
      }
      checks.add(std::string("exceedance_") + name, worst, 0.0, rep.pass);
    }
  }

  if (!out_path.empty()) {
    write_certificate(out_path, "verify-mc", checks, {{"seed", seed}});
  }
  return checks.all_pass ? kOk : kVerifyFail;
}

int cmd_filter(const std::string& x_path, const std::string& y_path,
               const std::string& method, const std::string& stat, double q,
               std::uint64_t seed) {
  const Eigen::MatrixXd x = pkf::read_matrix(x_path);
  const Eigen::VectorXd y = pkf::read_vector(y_path);
  if (y.size() != x.rows()) {
    std::cerr << "error: y has length " << y.size() << " but x has "
              << x.rows() << " rows\n";
    return kUsage;
  }
  if (x.rows() <= 2 * x.cols()) {
    std::cerr << "error: need n > 2p (got n=" << x.rows()
              << ", p=" << x.cols() << ")\n";
    return kUsage;
  }

  const std::string stat_name =
      stat.empty() ? (method == "opk" ? "w2" : "w1") : stat;
  const pkf::MethodSpec spec = pkf::parse_method_label(method + "_" + stat_name);

  pkf::DesignEnsemble design;
  design.x = x;
  design.sigma_hat = pkf::SymMatrix::gram(x);
  design.seed = seed;
  pkf::ConstructOptions opts;
  opts.m = spec.m;
  opts.group_size = spec.group_size;
  opts.seed = seed;
  const pkf::PseudoKnockoff pk =
      pkf::construct_method(spec.method, design, opts);

  const pkf::SplitCoefficients split = pkf::least_squares_split(x, pk.xt, y);
  pkf::FeatureStatistics stats;
  double lambda = 0.0;
  switch (spec.family) {
    case pkf::StatFamily::half_lasso: {
      lambda = pkf::default_lambda(split);
      const pkf::HalfLassoFit fit = pkf::half_lasso(x, pk.xt, y, lambda);
      stats = pkf::make_statistic(fit.sum_coef, fit.diff_coef, spec.kind, lambda);
      break;
    }
    case pkf::StatFamily::least_squares:
      stats = pkf::least_squares_statistic(split);
      break;
    case pkf::StatFamily::lasso_signmax:
      lambda = pkf::default_lambda(split);
      stats = pkf::lasso_signmax_baseline(x, pk.xt, y, lambda, pk.s);
      break;
  }

  const double t = pkf::knockoff_plus_threshold(stats.w, q);
  std::vector<int> selected;
  for (int j = 0; j < stats.w.size(); ++j) {
    if (stats.w(j) >= t) selected.push_back(j + 1);  // 1-based for output
  }

  std::cout << "n " << x.rows() << " p " << x.cols() << "\n";
  std::cout << "method " << spec.base_label() << " stat " << spec.stat_name()
            << " q " << q << "\n";
  std::cout << "lambda " << lambda << "\n";
  std::cout << "T " << (std::isinf(t) ? std::string("inf") : std::to_string(t))
            << "\n";
  std::cout << "selected " << selected.size() << "\n";
  std::cout << "indices";
  for (int j : selected) std::cout << ' ' << j;
  std::cout << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-knockoff filter: constructions, selection, "
               "simulation sweeps, and numeric verification"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir = ".", out_json;
  std::uint64_t seed = 1;
  int jobs = 0;

  CLI::App* run = app.add_subcommand("run", "run a simulation sweep");
  run->add_option("--config", config_path, "experiment config file");
  run->add_option("--preset", preset, "named preset (see --list-presets)");
  run->add_option("--out", out_dir, "artifact directory");
  CLI::Option* run_seed = run->add_option("--seed", seed, "override base seed");
  run->add_option("--jobs", jobs, "worker threads (0 = auto)");
  bool list_presets = false;
  run->add_flag("--list-presets", list_presets, "print preset names and exit");

  CLI::App* cc = app.add_subcommand("construct-check",
                                    "validate construction identities");
  cc->add_option("--out", out_json, "certificate json path");
  std::uint64_t cc_seed = 1;
  cc->add_option("--seed", cc_seed, "design sampling seed");

  CLI::App* vb = app.add_subcommand("verify-bounds",
                                    "certify the uniform ratio constant");
  std::string vb_out;
  vb->add_option("--out", vb_out, "certificate json path");
  int vb_jobs = 0;
  vb->add_option("--jobs", vb_jobs, "worker threads (0 = auto)");

  CLI::App* vm = app.add_subcommand("verify-mc",
                                    "Monte Carlo checks of the tail bounds");
  std::string vm_out;
  std::uint64_t vm_seed = 20240817;
  int vm_jobs = 0;
  vm->add_option("--out", vm_out, "certificate json path");
  vm->add_option("--seed", vm_seed, "base seed");
  vm->add_option("--jobs", vm_jobs, "worker threads (0 = auto)");

  CLI::App* ft = app.add_subcommand("filter", "select variables from x,y files");
  std::string x_path, y_path, method = "opk", stat;
  double q = 0.2;
  std::uint64_t ft_seed = 0;
  ft->add_option("--x", x_path, "design matrix (csv or npy)")->required();
  ft->add_option("--y", y_path, "response vector (csv or npy)")->required();
  ft->add_option("--method", method,
                 "construction: opk|bdpk<w>|gpk_m<k>|ko_equi|ko_sdp");
  ft->add_option("--stat", stat, "statistic: w1|w2|ls|signmax "
                 "(default w2 for opk, w1 otherwise)");
  ft->add_option("--q", q, "nominal FDR level");
  ft->add_option("--seed", ft_seed, "construction stream seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) {
      if (list_presets) {
        for (const std::string& name : pkf::preset_names()) {
          std::cout << name << "\n";
        }
        return kOk;
      }
      return cmd_run(config_path, preset, out_dir, run_seed->count() > 0, seed,
                     jobs);
    }
    if (cc->parsed()) return cmd_construct_check(out_json, cc_seed);
    if (vb->parsed()) return cmd_verify_bounds(vb_out, vb_jobs);
    if (vm->parsed()) return cmd_verify_mc(vm_out, vm_seed, vm_jobs);
    if (ft->parsed()) return cmd_filter(x_path, y_path, method, stat, q, ft_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
