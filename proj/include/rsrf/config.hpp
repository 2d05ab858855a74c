#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsrf/grower.hpp"
#include "rsrf/oracle.hpp"

namespace rsrf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key/value pairs grouped into [section] blocks. '#' starts a comment.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
  }

  static ConfigFile parse(const std::string& text,
                          const std::string& origin = "<config>") {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ConfigError(where(origin, lineno) + "unterminated [section]");
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        if (section.empty())
          throw ConfigError(where(origin, lineno) + "empty section name");
        cfg.sections_[section];
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(where(origin, lineno) + "expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(where(origin, lineno) + "empty key");
      if (cfg.sections_[section].count(key))
        throw ConfigError(where(origin, lineno) + "duplicate key '" + key + "'");
      cfg.sections_[section][key] = value;
    }
    return cfg;
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
      throw ConfigError(origin_ + ": missing key '" + key + "' in section [" +
                        section + "]");
    return s->second.at(key);
  }

  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    return parse_double(section, key, get(section, key));
  }

  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long long get_int(const std::string& section, const std::string& key) const {
    return parse_int(section, key, get(section, key));
  }

  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  std::vector<long long> get_int_list(const std::string& section,
                                      const std::string& key) const {
    std::vector<long long> out;
    std::istringstream in(get(section, key));
    std::string token;
    while (in >> token) out.push_back(parse_int(section, key, token));
    if (out.empty())
      throw ConfigError(origin_ + ": empty list for '" + key + "' in [" +
                        section + "]");
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  static std::string where(const std::string& origin, int lineno) {
    return origin + ":" + std::to_string(lineno) + ": ";
  }

  double parse_double(const std::string& section, const std::string& key,
                      const std::string& value) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": '" + key + "' in [" + section +
                        "] is not a number: '" + value + "'");
    }
  }

  long long parse_int(const std::string& section, const std::string& key,
                      const std::string& value) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": '" + key + "' in [" + section +
                        "] is not an integer: '" + value + "'");
    }
  }

  std::string origin_ = "<config>";
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// ---------------------------------------------------------------------------
// Model and splitter specs from config sections
// ---------------------------------------------------------------------------

inline PopulationModel model_from_config(const ConfigFile& cfg) {
  const auto dim = static_cast<std::size_t>(cfg.get_int_or("model", "dim", 3));
  const std::string kind = cfg.get_or("model", "regression", "example_interaction");
  RegressionFunction regression = RegressionFunction::example_interaction();
  if (kind == "example_interaction") {
    if (dim < 3) throw ConfigError("example_interaction needs dim >= 3");
  } else if (kind == "constant") {
    regression = RegressionFunction::constant(cfg.get_double_or("model", "value", 0.0));
  } else if (kind == "additive") {
    // components: "axis:shape:weight" tokens, e.g. "0:linear:1.0 1:sine:0.5"
    std::vector<AdditiveComponent> components;
    std::istringstream in(cfg.get_or("model", "components", ""));
    std::string token;
    while (in >> token) {
      const auto p1 = token.find(':');
      const auto p2 = token.rfind(':');
      if (p1 == std::string::npos || p2 == p1)
        throw ConfigError("additive component must be axis:shape:weight, got '" +
                          token + "'");
      const auto axis = static_cast<std::size_t>(std::stoll(token.substr(0, p1)));
      const std::string shape = token.substr(p1 + 1, p2 - p1 - 1);
      const double weight = std::stod(token.substr(p2 + 1));
      ComponentShape cs;
      if (shape == "linear")
        cs = ComponentShape::kLinear;
      else if (shape == "quadratic")
        cs = ComponentShape::kQuadratic;
      else if (shape == "sine")
        cs = ComponentShape::kSine;
      else
        throw ConfigError("unknown component shape '" + shape + "'");
      if (axis >= dim) throw ConfigError("component axis out of range");
      components.push_back({axis, cs, weight});
    }
    regression = RegressionFunction::additive(
        cfg.get_double_or("model", "intercept", 0.0), std::move(components));
  } else {
    throw ConfigError("unknown regression kind '" + kind + "'");
  }
  NoiseSpec noise;
  const std::string noise_kind = cfg.get_or("model", "noise", "gaussian");
  if (noise_kind == "gaussian")
    noise.kind = NoiseSpec::Kind::kGaussian;
  else if (noise_kind == "uniform")
    noise.kind = NoiseSpec::Kind::kUniformSymmetric;
  else
    throw ConfigError("unknown noise kind '" + noise_kind + "'");
  noise.scale = cfg.get_double_or("model", "noise_scale", 0.0);
  if (noise.scale < 0.0) throw ConfigError("noise_scale must be >= 0");
  return PopulationModel(dim, std::move(regression), noise);
}

inline SplitterConfig splitter_from_config(const ConfigFile& cfg) {
  const std::string kind = cfg.get_or("splitter", "kind", "cart");
  if (kind == "cart") return CartConfig{};
  if (kind == "extratrees")
    return ExtraTreesConfig{static_cast<int>(cfg.get_int_or("splitter", "nsplit", 8))};
  if (kind == "interaction")
    return InteractionForestConfig{
        static_cast<int>(cfg.get_int_or("splitter", "npairs", 8))};
  if (kind == "oblique")
    return ObliqueConfig{
        static_cast<int>(cfg.get_int_or("splitter", "ncandidates", 8))};
  if (kind == "rsrf")
    return RsrfConfig{static_cast<int>(cfg.get_int_or("splitter", "width", 5))};
  throw ConfigError("unknown splitter kind '" + kind + "'");
}

inline std::string splitter_name(const SplitterConfig& config) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, CartConfig>)
          return "cart";
        else if constexpr (std::is_same_v<T, ExtraTreesConfig>)
          return "extratrees(nsplit=" + std::to_string(c.nsplit) + ")";
        else if constexpr (std::is_same_v<T, InteractionForestConfig>)
          return "interaction(npairs=" + std::to_string(c.npairs) + ")";
        else if constexpr (std::is_same_v<T, ObliqueConfig>)
          return "oblique(ncandidates=" + std::to_string(c.ncandidates) + ")";
        else
          return "rsrf(W=" + std::to_string(c.width) + ")";
      },
      config);
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Depth schedule k_n = max(2, 2 ceil(c log2(n) / 2)): the smallest even depth
/// at least c log2(n), so RSRF's two-level steps always fit.
inline int even_depth_for(std::size_t n, double c) {
  const double raw = c * std::log2(static_cast<double>(n));
  const int k = 2 * static_cast<int>(std::ceil(raw / 2.0 - 1e-12));
  return std::max(2, k);
}

struct ExperimentConfig {
  std::vector<std::size_t> n_schedule;
  int n_trees = 20;
  double depth_c = 0.2;            // used when fixed_depth is absent
  std::optional<int> fixed_depth;
  std::size_t test_size = 2000;
  std::vector<std::uint64_t> seeds;
  std::size_t min_samples = 1;

  int depth_for(std::size_t n) const {
    return fixed_depth ? *fixed_depth : even_depth_for(n, depth_c);
  }
};

inline ExperimentConfig experiment_from_config(const ConfigFile& cfg) {
  ExperimentConfig config;
  for (long long n : cfg.get_int_list("experiment", "n_schedule")) {
    if (n < 1) throw ConfigError("n_schedule entries must be >= 1");
    config.n_schedule.push_back(static_cast<std::size_t>(n));
  }
  config.n_trees = static_cast<int>(cfg.get_int_or("experiment", "n_trees", 20));
  if (config.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (cfg.has("experiment", "depth")) {
    config.fixed_depth = static_cast<int>(cfg.get_int("experiment", "depth"));
    if (*config.fixed_depth < 1) throw ConfigError("depth must be >= 1");
  }
  config.depth_c = cfg.get_double_or("experiment", "depth_c", 0.2);
  if (!(config.depth_c > 0.0 && config.depth_c <= 0.25))
    throw ConfigError("depth_c must lie in (0, 0.25]");
  config.test_size =
      static_cast<std::size_t>(cfg.get_int_or("experiment", "test_size", 2000));
  if (config.test_size < 1) throw ConfigError("test_size must be >= 1");
  for (long long s : cfg.get_int_list("experiment", "seeds"))
    config.seeds.push_back(static_cast<std::uint64_t>(s));
  config.min_samples =
      static_cast<std::size_t>(cfg.get_int_or("experiment", "min_samples", 1));
  if (config.min_samples < 1) throw ConfigError("min_samples must be >= 1");
  return config;
}

}  // namespace rsrf
