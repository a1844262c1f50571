#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pseudoknockoff/construct.hpp"
#include "pseudoknockoff/datagen.hpp"
#include "pseudoknockoff/stats.hpp"

namespace pkf {

/// Which default setting a sweep varies, one per experiment.
enum class SweepVariable {
  sparsity,       // k
  amplitude,      // A
  correlation,    // rho of an ar/precision covariance
  scale,          // l: n = 150 l, p = 50 l, k = 10 l
  within_group,   // rho of a group covariance (gamma fixed)
  between_group,  // gamma of a group covariance (rho fixed)
};

const char* sweep_name(SweepVariable v);
SweepVariable sweep_from_name(const std::string& name);

/// How the selection statistic is computed from a fitted companion design.
enum class StatFamily {
  half_lasso,     // penalized sum / exact difference, W1 or W2
  least_squares,  // raw split coefficients, W1 formula
  lasso_signmax,  // joint-Lasso sign-max baseline (knockoff kinds only)
};

/// One curve in an experiment: a construction plus a statistic.
struct MethodSpec {
  Method method = Method::orthogonal;
  StatFamily family = StatFamily::half_lasso;
  StatKind kind = StatKind::w2;  // half_lasso family only
  int m = 2;                     // interleaved classes (general kind)
  int group_size = 5;            // block width (block_diagonal kind)

  std::string base_label() const;  // construction only, e.g. "gpk_m2"
  std::string stat_name() const;   // "w1" | "w2" | "ls" | "signmax"
  std::string label() const;       // base_label() + "_" + stat_name()
};

/// Inverse of MethodSpec::label().  Grammar:
///   (opk | bdpk<width> | gpk_m<classes> | ko_equi | ko_sdp)
///   "_" (w1 | w2 | ls | signmax)
/// signmax requires a knockoff construction (it masks by s).
MethodSpec parse_method_label(const std::string& label);

struct ExperimentConfig {
  int n = 300;
  int p = 100;
  int k = 10;
  double amplitude = 3.5;
  double q = 0.2;
  int trials = 200;
  std::uint64_t seed = 1;
  int n_threads = 0;            // 0 = hardware default
  bool freeze_support = false;  // redraw the support each trial by default

  CovKind cov = CovKind::identity;
  double rho = 0.0;
  double gamma = 0.0;
  int group_size = 5;  // group covariance only

  SweepVariable sweep = SweepVariable::sparsity;
  std::vector<double> grid;  // nonempty; sparsity/scale values integral

  std::vector<MethodSpec> methods;
};

/// Throws std::invalid_argument naming the offending field.  Grid-point
/// feasibility (n > 2p, k <= p, ...) is checked per point at run time so
/// one bad point fails alone.
void validate_config(const ExperimentConfig& cfg);

/// Concrete settings at one grid position.
struct GridPoint {
  int index = 0;
  double value = 0.0;
  int n = 0, p = 0, k = 0;
  double amplitude = 0.0;
  CovarianceModel model;
};

GridPoint expand_grid_point(const ExperimentConfig& cfg, int index);

struct TrialRecord {
  int grid_index = 0;
  double grid_value = 0.0;
  std::string method;     // construction label, e.g. "gpk_m2"
  std::string statistic;  // "w1" | "w2" | "ls" | "signmax"
  std::uint64_t seed = 0;
  double threshold = 0.0;  // +infinity when nothing is selected
  int n_selected = 0;
  double fdp = 0.0;
  double power = 0.0;
  double ratio_stat = 0.0;
  double lambda = 0.0;
  int sweeps = 0;  // coordinate-descent sweeps, 0 for closed-form fits
  bool failed = false;
  std::string failure;
};

struct SummaryRow {
  int grid_index = 0;
  double grid_value = 0.0;
  std::string method;
  std::string statistic;
  int n_ok = 0;
  int n_failed = 0;
  double fdr = 0.0, fdr_se = 0.0;
  double power = 0.0, power_se = 0.0;
  double ratio = 0.0, ratio_se = 0.0;
  double mean_selected = 0.0;
  double mean_lambda = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;  // grid-major, then trial, then method
  std::vector<SummaryRow> summary;  // grid-major, then method order
  std::vector<std::string> errors;  // grid/construction failures
  bool complete = true;             // false iff errors is nonempty
};

/// Runs the sweep.  Per grid point: the design and every companion are
/// constructed once (seed = combine(base, grid)), then trials fan out
/// concurrently (seed = combine(base, grid, trial)); all methods inside a
/// trial share the identical (x, beta, y).  A failed construction or an
/// infeasible grid point is recorded in `errors` and skipped; a failed
/// trial fit produces a TrialRecord with failed = true.  Output is
/// byte-stable for a fixed seed regardless of n_threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Means and standard errors per (grid point, method, statistic), in
/// first-appearance order.  Failed records are counted but excluded from
/// the means; a single sample reports SE = 0.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

/// Artifact writers.  Every file carries a schema_version marker; numbers
/// are printed with %.17g so reruns are byte-identical.
void write_trials_csv(const std::vector<TrialRecord>& records,
                      const std::string& path);
void write_summary_json(const ExperimentResult& result,
                        const std::string& path);
/// fdr.csv, power.csv, ratio.csv under `dir`: one row per grid value, one
/// mean/se column pair per method series.
void write_plotdata_csv(const ExperimentResult& result,
                        const std::string& dir);

/// Named ready-to-run configurations (desk scale by default; "_full"
/// suffix switches to the original large-scale settings).
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Flat sectioned key-value config text ("[section]" + "key = value",
/// '#' comments).  Values keep their source line for diagnostics.
struct ParsedConfig {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;  // key is "section.key"
};

ParsedConfig parse_config_text(const std::string& text);
ParsedConfig load_config_file(const std::string& path);

/// Builds an ExperimentConfig, consuming every recognized key; unknown or
/// malformed keys raise std::invalid_argument with the line number.
ExperimentConfig experiment_config_from(const ParsedConfig& parsed);

}  // namespace pkf
