#pragma once

// Run configuration: a flat JSON object. Every key is optional; missing keys
// take the defaults below. `--set key=value` overrides are applied on top.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aigenc/blending.hpp"
#include "aigenc/encoder.hpp"
#include "aigenc/env.hpp"
#include "aigenc/graph_json.hpp"
#include "aigenc/memory.hpp"
#include "aigenc/reasoning.hpp"

namespace aigenc {

/// Field-level validation failure (exit code 2 at the CLI).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  std::string task = "BaseKeyDoor";
  std::string layout;  // text layout file, only for task "Custom"
  std::vector<std::uint64_t> seeds{0};
  std::int64_t episodes = 300;  // N
  std::int64_t init_episodes = 20;
  std::string pretrain_task = "BaseKeyDoor";
  std::int64_t pretrain_episodes = 0;

  // concept space
  std::int64_t K = 6;
  std::int64_t M = 12;
  std::int64_t P = 4;

  // memory and matching
  std::int64_t k_clusters = 4;
  double Z = 0.8;
  double X = 0.5;
  double z_dup = 0.995;
  double alpha = 0.5;
  double epsilon_ot = 0.05;
  double tau = 1.0;
  double delta_merge = 0.0;  // 0 = automatic

  // blending
  std::int64_t F = 5;
  std::int64_t blend_limit = 3;
  double delta = 0.0;  // 0 = automatic, inf = accept every blend

  // environment
  std::int64_t width = 8;
  std::int64_t height = 8;
  std::int64_t max_steps = 200;
  double delta_env = 1.25;

  // policy
  double eta = 0.1;
  double gamma = 0.95;
  double epsilon = 0.1;
  double epsilon_decay = 0.995;

  bool reasoning = true;
  bool blending = true;

  std::string output_dir;  // empty = $AIGENC_OUT or ./runs
  std::int64_t workers = 1;

  Dims dims() const { return Dims{static_cast<std::size_t>(M), static_cast<std::size_t>(P)}; }

  OtParams ot() const {
    OtParams p;
    p.alpha = alpha;
    p.epsilon = epsilon_ot;
    p.tau = tau;
    return p;
  }

  MemoryParams memory() const {
    MemoryParams p;
    p.z_dup = z_dup;
    p.k = static_cast<std::size_t>(k_clusters);
    p.ot = ot();
    return p;
  }

  ReasoningParams reasoning_params() const {
    ReasoningParams p;
    p.z = Z;
    p.delta_merge = delta_merge;
    p.ot = ot();
    return p;
  }

  BlendingParams blending_params() const {
    BlendingParams p;
    p.x = X;
    p.z = Z;
    p.limit = static_cast<std::size_t>(blend_limit);
    p.delta = delta;
    p.tau = tau;
    p.k = static_cast<std::size_t>(k_clusters);
    return p;
  }

  EncoderConfig encoder() const { return EncoderConfig{dims(), static_cast<std::size_t>(K), "chebyshev"}; }

  EnvConfig env() const {
    EnvConfig e;
    e.width = static_cast<int>(width);
    e.height = static_cast<int>(height);
    e.max_steps = static_cast<int>(max_steps);
    e.delta_env = delta_env;
    return e;
  }
};

namespace detail {

inline json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

inline double read_real(const json& j, const std::string& key) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError(key, "expected a number, got '" + s + "'");
  }
  if (!j.is_number()) throw ConfigError(key, "expected a number");
  return j.get<double>();
}

inline std::int64_t read_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
  return j.get<std::int64_t>();
}

inline bool read_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError(key, "expected true or false");
  return j.get<bool>();
}

inline std::string read_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

/// Everything that influences run outputs. `output_dir` and `workers` are
/// deliberately left out: they decide where and how fast, not what.
inline json to_json(const RunConfig& c) {
  return json{{"task", c.task},
              {"layout", c.layout},
              {"seeds", c.seeds},
              {"episodes", c.episodes},
              {"init_episodes", c.init_episodes},
              {"pretrain_task", c.pretrain_task},
              {"pretrain_episodes", c.pretrain_episodes},
              {"K", c.K},
              {"M", c.M},
              {"P", c.P},
              {"k_clusters", c.k_clusters},
              {"Z", c.Z},
              {"X", c.X},
              {"z_dup", c.z_dup},
              {"alpha", c.alpha},
              {"epsilon_ot", c.epsilon_ot},
              {"tau", c.tau},
              {"delta_merge", c.delta_merge},
              {"F", c.F},
              {"blend_limit", c.blend_limit},
              {"delta", detail::number_or_inf(c.delta)},
              {"width", c.width},
              {"height", c.height},
              {"max_steps", c.max_steps},
              {"delta_env", c.delta_env},
              {"eta", c.eta},
              {"gamma", c.gamma},
              {"epsilon", c.epsilon},
              {"epsilon_decay", c.epsilon_decay},
              {"reasoning", c.reasoning},
              {"blending", c.blending}};
}

/// Sets one field from JSON. Unknown keys are rejected.
inline void set_field(RunConfig& c, const std::string& key, const json& v) {
  using namespace detail;
  if (key == "task") c.task = read_string(v, key);
  else if (key == "layout") c.layout = read_string(v, key);
  else if (key == "seeds") {
    c.seeds.clear();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(key, "seeds must be >= 0");
      c.seeds.push_back(v.get<std::uint64_t>());
    } else {
      if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
      for (const auto& s : v) {
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0) throw ConfigError(key, "seeds must be integers >= 0");
        c.seeds.push_back(s.get<std::uint64_t>());
      }
    }
  }
  else if (key == "episodes" || key == "N") c.episodes = read_int(v, key);
  else if (key == "init_episodes") c.init_episodes = read_int(v, key);
  else if (key == "pretrain_task") c.pretrain_task = read_string(v, key);
  else if (key == "pretrain_episodes") c.pretrain_episodes = read_int(v, key);
  else if (key == "K") c.K = read_int(v, key);
  else if (key == "M") c.M = read_int(v, key);
  else if (key == "P") c.P = read_int(v, key);
  else if (key == "k_clusters") c.k_clusters = read_int(v, key);
  else if (key == "Z") c.Z = read_real(v, key);
  else if (key == "X") c.X = read_real(v, key);
  else if (key == "z_dup") c.z_dup = read_real(v, key);
  else if (key == "alpha") c.alpha = read_real(v, key);
  else if (key == "epsilon_ot") c.epsilon_ot = read_real(v, key);
  else if (key == "tau") c.tau = read_real(v, key);
  else if (key == "delta_merge") c.delta_merge = read_real(v, key);
  else if (key == "F") c.F = read_int(v, key);
  else if (key == "blend_limit") c.blend_limit = read_int(v, key);
  else if (key == "delta") c.delta = read_real(v, key);
  else if (key == "width") c.width = read_int(v, key);
  else if (key == "height") c.height = read_int(v, key);
  else if (key == "max_steps") c.max_steps = read_int(v, key);
  else if (key == "delta_env") c.delta_env = read_real(v, key);
  else if (key == "eta") c.eta = read_real(v, key);
  else if (key == "gamma") c.gamma = read_real(v, key);
  else if (key == "epsilon") c.epsilon = read_real(v, key);
  else if (key == "epsilon_decay") c.epsilon_decay = read_real(v, key);
  else if (key == "reasoning") c.reasoning = read_bool(v, key);
  else if (key == "blending") c.blending = read_bool(v, key);
  else if (key == "output_dir") c.output_dir = read_string(v, key);
  else if (key == "workers") c.workers = read_int(v, key);
  else throw ConfigError(key, "unknown key");
}

/// Throws ConfigError naming the first offending field.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  try {
    const Task t = task_from_string(c.task);
    require(t != Task::Custom || !c.layout.empty(), "layout", "task Custom needs a layout file");
  } catch (const std::invalid_argument&) {
    throw ConfigError("task", "unknown task '" + c.task + "'");
  }
  try {
    require(task_from_string(c.pretrain_task) != Task::Custom, "pretrain_task", "must be a built-in task");
  } catch (const std::invalid_argument&) {
    throw ConfigError("pretrain_task", "unknown task '" + c.pretrain_task + "'");
  }
  require(!c.seeds.empty(), "seeds", "need at least one seed");
  require(c.episodes >= 0, "episodes", "must be >= 0");
  require(c.init_episodes >= 0, "init_episodes", "must be >= 0");
  require(c.pretrain_episodes >= 0, "pretrain_episodes", "must be >= 0");
  require(c.K >= 1, "K", "must be >= 1");
  require(c.M >= static_cast<std::int64_t>(kRawObjectDims), "M",
          "must be >= " + std::to_string(kRawObjectDims) + " to hold the object vocabulary");
  require(c.P >= 1, "P", "must be >= 1");
  require(c.k_clusters >= 1, "k_clusters", "must be >= 1");
  require(c.Z > 0.0 && c.Z <= 1.0, "Z", "must satisfy 0 < Z <= 1");
  require(c.X > 0.0 && c.X < c.Z, "X", "must satisfy 0 < X < Z");
  require(c.z_dup > 0.0 && c.z_dup <= 1.0, "z_dup", "must be in (0,1]");
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha", "must be in [0,1]");
  require(c.epsilon_ot > 0.0 && std::isfinite(c.epsilon_ot), "epsilon_ot", "must be > 0");
  require(c.tau > 0.0 && std::isfinite(c.tau), "tau", "must be > 0");
  require(c.delta_merge >= 0.0 && std::isfinite(c.delta_merge), "delta_merge", "must be >= 0 (0 = automatic)");
  require(c.F >= 1, "F", "must be >= 1");
  require(c.blend_limit >= 0, "blend_limit", "must be >= 0");
  require(c.delta >= 0.0, "delta", "must be >= 0 (0 = automatic, \"inf\" = accept all)");
  require(c.width >= 6, "width", "must be >= 6");
  require(c.height >= 1, "height", "must be >= 1");
  require(c.max_steps >= 1, "max_steps", "must be >= 1");
  require(c.delta_env >= 0.0, "delta_env", "must be >= 0");
  require(c.eta > 0.0 && std::isfinite(c.eta), "eta", "must be > 0");
  require(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma", "must be in [0,1]");
  require(c.epsilon >= 0.0 && c.epsilon <= 1.0, "epsilon", "must be in [0,1]");
  require(c.epsilon_decay > 0.0 && c.epsilon_decay <= 1.0, "epsilon_decay", "must be in (0,1]");
  require(c.workers >= 0, "workers", "must be >= 0 (0 = one per core)");
}

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) set_field(c, key, value);
  return c;
}

/// Applies "key=value". The value is read as JSON when it parses, otherwise as a string.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_field(c, key, value);
}

inline RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("<file>", e.what());
  }
  json j;
  try {
    j = parse_json_text(text);
  } catch (const ParseError& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// 64-bit FNV-1a over the canonical JSON text, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace aigenc
