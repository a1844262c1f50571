#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pseudoknockoff/simharness.hpp"

namespace pkf {
namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Typed access with consumption tracking so leftovers can be reported.
class Reader {
 public:
  explicit Reader(const ParsedConfig& parsed) : parsed_(parsed) {}

  const ParsedConfig::Entry* find(const std::string& key) {
    auto it = parsed_.entries.find(key);
    if (it == parsed_.entries.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto* e = find(key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& key, double fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    return parse_double(key, *e);
  }

  int get_int(const std::string& key, int fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    const double v = parse_double(key, *e);
    if (v != double(int(v))) fail_line(e->line, "'" + key + "' must be an integer");
    return int(v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    try {
      size_t used = 0;
      const std::uint64_t v = std::stoull(e->value, &used);
      if (used != e->value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail_line(e->line, "'" + key + "' must be an unsigned integer");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    fail_line(e->line, "'" + key + "' must be true or false");
  }

  std::vector<double> get_doubles(const std::string& key) {
    const auto* e = find(key);
    if (!e) return {};
    std::vector<double> out;
    for (const std::string& tok : split_ws(e->value)) {
      try {
        size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail_line(e->line, "'" + key + "': bad number '" + tok + "'");
      }
    }
    return out;
  }

  std::vector<std::string> get_words(const std::string& key) {
    const auto* e = find(key);
    return e ? split_ws(e->value) : std::vector<std::string>{};
  }

  int line_of(const std::string& key) const {
    auto it = parsed_.entries.find(key);
    return it == parsed_.entries.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : parsed_.entries) {
      if (!used_.count(key)) {
        fail_line(entry.line, "unknown key '" + key + "'");
      }
    }
  }

 private:
  double parse_double(const std::string& key, const ParsedConfig::Entry& e) {
    try {
      size_t used = 0;
      const double v = std::stod(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail_line(e.line, "'" + key + "' must be a number");
    }
  }

  const ParsedConfig& parsed_;
  std::set<std::string> used_;
};

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find_first_of("#;");
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail_line(lineno, "malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail_line(lineno, "empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail_line(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_line(lineno, "empty key");
    if (section.empty()) fail_line(lineno, "key outside any [section]");
    const std::string full = section + "." + key;
    if (out.entries.count(full)) {
      fail_line(lineno, "duplicate key '" + full + "'");
    }
    out.entries[full] = {value, lineno};
  }
  return out;
}

ParsedConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::invalid_argument("cannot read config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

ExperimentConfig experiment_config_from(const ParsedConfig& parsed) {
  Reader r(parsed);
  ExperimentConfig cfg;

  cfg.n = r.get_int("experiment.n", cfg.n);
  cfg.p = r.get_int("experiment.p", cfg.p);
  cfg.k = r.get_int("experiment.k", cfg.k);
  cfg.amplitude = r.get_double("experiment.amplitude", cfg.amplitude);
  cfg.q = r.get_double("experiment.q", cfg.q);
  cfg.trials = r.get_int("experiment.trials", cfg.trials);
  cfg.seed = r.get_u64("experiment.seed", cfg.seed);
  cfg.freeze_support = r.get_bool("experiment.freeze_support", cfg.freeze_support);

  const std::string sweep = r.get_string("experiment.sweep", "");
  if (sweep.empty()) {
    throw std::invalid_argument("config: missing required key 'experiment.sweep'");
  }
  try {
    cfg.sweep = sweep_from_name(sweep);
  } catch (const std::exception& e) {
    fail_line(r.line_of("experiment.sweep"), e.what());
  }

  cfg.grid = r.get_doubles("experiment.grid");
  if (cfg.grid.empty()) {
    throw std::invalid_argument("config: missing required key 'experiment.grid'");
  }

  const std::vector<std::string> methods = r.get_words("experiment.methods");
  if (methods.empty()) {
    throw std::invalid_argument(
        "config: missing required key 'experiment.methods'");
  }
  for (const std::string& label : methods) {
    try {
      cfg.methods.push_back(parse_method_label(label));
    } catch (const std::exception& e) {
      fail_line(r.line_of("experiment.methods"), e.what());
    }
  }

  const std::string kind = r.get_string("covariance.kind", "identity");
  try {
    cfg.cov = cov_kind_from_name(kind);
  } catch (const std::exception& e) {
    fail_line(r.line_of("covariance.kind"), e.what());
  }
  cfg.rho = r.get_double("covariance.rho", cfg.rho);
  cfg.gamma = r.get_double("covariance.gamma", cfg.gamma);
  cfg.group_size = r.get_int("covariance.group_size", cfg.group_size);

  r.reject_unused();
  validate_config(cfg);
  return cfg;
}

}  // namespace pkf
