#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pseudoknockoff/simharness.hpp"

namespace pkf {
namespace {

constexpr int kSchemaVersion = 1;

// %.17g round-trips doubles exactly, so reruns diff clean.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no CRLF surprises
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  return out;
}

nlohmann::json covariance_json(const ExperimentConfig& cfg) {
  return {{"kind", cov_kind_name(cfg.cov)},
          {"rho", cfg.rho},
          {"gamma", cfg.gamma},
          {"group_size", cfg.group_size}};
}

}  // namespace

void write_trials_csv(const std::vector<TrialRecord>& records,
                      const std::string& path) {
  std::ofstream out = open_out(path);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "grid_index,grid_value,method,statistic,seed,threshold,n_selected,"
         "fdp,power,ratio_stat,lambda,sweeps,failed,failure\n";
  for (const TrialRecord& r : records) {
    out << r.grid_index << ',' << num(r.grid_value) << ',' << r.method << ','
        << r.statistic << ',' << r.seed << ',' << num(r.threshold) << ','
        << r.n_selected << ',' << num(r.fdp) << ',' << num(r.power) << ','
        << num(r.ratio_stat) << ',' << num(r.lambda) << ',' << r.sweeps << ','
        << (r.failed ? 1 : 0) << ',' << csv_escape(r.failure) << '\n';
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_summary_json(const ExperimentResult& result,
                        const std::string& path) {
  const ExperimentConfig& cfg = result.config;
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["sweep"] = sweep_name(cfg.sweep);
  doc["grid"] = cfg.grid;
  doc["n"] = cfg.n;
  doc["p"] = cfg.p;
  doc["k"] = cfg.k;
  doc["amplitude"] = cfg.amplitude;
  doc["q"] = cfg.q;
  doc["trials"] = cfg.trials;
  doc["seed"] = cfg.seed;
  doc["freeze_support"] = cfg.freeze_support;
  doc["covariance"] = covariance_json(cfg);
  doc["methods"] = nlohmann::json::array();
  for (const MethodSpec& ms : cfg.methods) doc["methods"].push_back(ms.label());
  doc["complete"] = result.complete;
  doc["errors"] = result.errors;

  // one series per method, points in grid order
  nlohmann::json series = nlohmann::json::array();
  for (const MethodSpec& ms : cfg.methods) {
    nlohmann::json entry;
    entry["method"] = ms.base_label();
    entry["statistic"] = ms.stat_name();
    entry["label"] = ms.label();
    nlohmann::json points = nlohmann::json::array();
    for (const SummaryRow& row : result.summary) {
      if (row.method != ms.base_label() || row.statistic != ms.stat_name()) {
        continue;
      }
      points.push_back({{"grid_index", row.grid_index},
                        {"grid_value", row.grid_value},
                        {"n_ok", row.n_ok},
                        {"n_failed", row.n_failed},
                        {"fdr", row.fdr},
                        {"fdr_se", row.fdr_se},
                        {"power", row.power},
                        {"power_se", row.power_se},
                        {"ratio", row.ratio},
                        {"ratio_se", row.ratio_se},
                        {"mean_selected", row.mean_selected},
                        {"mean_lambda", row.mean_lambda}});
    }
    entry["points"] = std::move(points);
    series.push_back(std::move(entry));
  }
  doc["series"] = std::move(series);

  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_plotdata_csv(const ExperimentResult& result,
                        const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const ExperimentConfig& cfg = result.config;

  struct Metric {
    const char* file;
    double SummaryRow::* mean;
    double SummaryRow::* se;
  };
  const Metric metrics[] = {
      {"fdr.csv", &SummaryRow::fdr, &SummaryRow::fdr_se},
      {"power.csv", &SummaryRow::power, &SummaryRow::power_se},
      {"ratio.csv", &SummaryRow::ratio, &SummaryRow::ratio_se},
  };

  for (const Metric& metric : metrics) {
    std::ofstream out = open_out((fs::path(dir) / metric.file).string());
    out << "# schema_version=" << kSchemaVersion << "\n";
    out << "grid_value";
    for (const MethodSpec& ms : cfg.methods) {
      out << ',' << ms.label() << "_mean," << ms.label() << "_se";
    }
    out << '\n';
    for (int g = 0; g < int(cfg.grid.size()); ++g) {
      out << num(cfg.grid[size_t(g)]);
      for (const MethodSpec& ms : cfg.methods) {
        const SummaryRow* found = nullptr;
        for (const SummaryRow& row : result.summary) {
          if (row.grid_index == g && row.method == ms.base_label() &&
              row.statistic == ms.stat_name()) {
            found = &row;
            break;
          }
        }
        if (found && found->n_ok > 0) {
          out << ',' << num(found->*(metric.mean)) << ','
              << num(found->*(metric.se));
        } else {
          out << ",nan,nan";  // grid point never produced a usable trial
        }
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("short write in '" + dir + "'");
  }
}

}  // namespace pkf
