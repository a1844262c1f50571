#include <stdexcept>
#include <string>
#include <vector>

#include "pseudoknockoff/simharness.hpp"

namespace pkf {
namespace {

std::vector<double> linspace_step(double lo, double hi, double step) {
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

std::vector<MethodSpec> labels(const std::vector<std::string>& names) {
  std::vector<MethodSpec> out;
  out.reserve(names.size());
  for (const std::string& n : names) out.push_back(parse_method_label(n));
  return out;
}

// Desk scale keeps runtimes CI-friendly; the "_full" variants restore the
// original large-scale settings.
ExperimentConfig desk_base() {
  ExperimentConfig cfg;
  cfg.n = 300;
  cfg.p = 100;
  cfg.k = 10;
  cfg.amplitude = 3.5;
  cfg.q = 0.2;
  cfg.trials = 200;
  cfg.seed = 1;
  cfg.methods = labels({"opk_w2", "bdpk5_w1", "gpk_m2_w1"});
  return cfg;
}

ExperimentConfig full_base() {
  ExperimentConfig cfg = desk_base();
  cfg.n = 1500;
  cfg.p = 500;
  cfg.k = 30;
  return cfg;
}

// The comparison studies use a larger amplitude and put the classical
// knockoff baselines next to the pseudo constructions.
std::vector<MethodSpec> comparison_methods() {
  return labels({"opk_w2", "gpk_m5_w1", "bdpk5_w1", "ko_sdp_w1", "ko_sdp_signmax"});
}

ExperimentConfig build(const std::string& name, bool full) {
  ExperimentConfig cfg = full ? full_base() : desk_base();
  if (name == "sparsity") {
    cfg.sweep = SweepVariable::sparsity;
    cfg.grid = full ? linspace_step(10, 100, 10) : std::vector<double>{5, 10, 20};
  } else if (name == "amplitude") {
    cfg.sweep = SweepVariable::amplitude;
    cfg.grid = full ? linspace_step(2.8, 4.2, 0.1)
                    : std::vector<double>{2.8, 3.5, 4.2};
  } else if (name == "correlation") {
    cfg.cov = CovKind::ar;
    cfg.sweep = SweepVariable::correlation;
    cfg.grid = full ? linspace_step(0.0, 0.9, 0.1)
                    : std::vector<double>{0.0, 0.5, 0.9};
  } else if (name == "scale") {
    cfg.sweep = SweepVariable::scale;
    cfg.grid = full ? linspace_step(2, 12, 1) : std::vector<double>{1, 2, 3};
  } else if (name == "within_group") {
    cfg.cov = CovKind::group;
    cfg.group_size = 5;
    cfg.gamma = 0.0;
    cfg.sweep = SweepVariable::within_group;
    cfg.grid = full ? linspace_step(0.0, 0.9, 0.1)
                    : std::vector<double>{0.5, 0.9};
  } else if (name == "between_group") {
    cfg.cov = CovKind::group;
    cfg.group_size = 5;
    cfg.rho = 0.5;
    cfg.sweep = SweepVariable::between_group;
    cfg.grid = full ? linspace_step(0.0, 0.9, 0.1)
                    : std::vector<double>{0.0, 0.5, 0.9};
  } else if (name == "group_structure") {
    cfg.cov = CovKind::group;
    cfg.group_size = 5;
    cfg.gamma = 0.0;
    cfg.amplitude = 5.0;
    cfg.sweep = SweepVariable::within_group;
    cfg.grid = full ? linspace_step(0.5, 0.95, 0.05)
                    : std::vector<double>{0.5, 0.9};
    cfg.methods = comparison_methods();
  } else if (name == "precision_block" || name == "precision_decay" ||
             name == "precision_equi") {
    cfg.cov = name == "precision_block"  ? CovKind::precision_a
              : name == "precision_decay" ? CovKind::precision_b
                                          : CovKind::precision_c;
    cfg.amplitude = 5.0;
    cfg.sweep = SweepVariable::correlation;
    if (name == "precision_equi") {
      cfg.grid = full ? linspace_step(0.0, 0.9, 0.1)
                      : std::vector<double>{0.0, 0.3, 0.6, 0.9};
    } else {
      cfg.grid = full ? linspace_step(0.5, 0.95, 0.05)
                      : std::vector<double>{0.5, 0.7, 0.9};
    }
    cfg.methods = comparison_methods();
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const char* base :
       {"sparsity", "amplitude", "correlation", "scale", "within_group",
        "between_group", "group_structure", "precision_block",
        "precision_decay", "precision_equi"}) {
    names.push_back(base);
    names.push_back(std::string(base) + "_full");
  }
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  constexpr std::string_view suffix = "_full";
  const bool full =
      name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  const std::string base =
      full ? name.substr(0, name.size() - suffix.size()) : name;
  ExperimentConfig cfg = build(base, full);
  validate_config(cfg);
  return cfg;
}

}  // namespace pkf
