#pragma once

// Pieces of the command-line tool that are worth testing on their own:
// layered run configuration, rule resolution and schedule export.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seevo/bench.hpp"
#include "seevo/core.hpp"
#include "seevo/evolve.hpp"
#include "seevo/llm.hpp"
#include "seevo/rulelang.hpp"

namespace seevo::cli {

enum ExitCode : int { kOk = 0, kRunFailure = 1, kInputError = 2 };

using Layer = std::map<std::string, std::string>;

// Every key a run understands, with its default.
inline const Layer& config_defaults() {
  static const Layer d = {
      {"population_size", "20"},
      {"max_fe", "20"},
      {"mutation_probability", "0.5"},
      {"crossover_probability", "1.0"},
      {"cases", "20"},
      {"case_kind", "static"},
      {"elite_count", "1"},
      {"self_evolution", "true"},
      {"seed", "0"},
      {"temperature", "1.0"},
      {"memory_cap", "10"},
      {"jobs", "1"},
      {"retry_attempts", "3"},
      {"provider", "offline"},
      {"transcript", ""},
      {"run_dir", ""},
      {"prompts", ""},
      {"model", "gpt-3.5-turbo-0125"},
      {"base_url", "https://api.openai.com/v1"},
      {"api_key", ""},
      {"timeout_s", "60"},
  };
  return d;
}

// key = value lines; '#' starts a comment line.
inline Layer parse_config_text(std::string_view text) {
  Layer out;
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    if (!config_defaults().count(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

inline Layer load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// LLM_API_KEY, LLM_BASE_URL and LLM_MODEL.
inline Layer environment_layer(const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  Layer out;
  const std::pair<const char*, const char*> vars[] = {
      {"LLM_API_KEY", "api_key"}, {"LLM_BASE_URL", "base_url"}, {"LLM_MODEL", "model"}};
  for (auto [var, key] : vars)
    if (const char* v = getenv_fn(var); v && *v) out[key] = v;
  return out;
}

// Resolved configuration. Layers are applied lowest precedence first:
// defaults, config file, environment, flags.
class RunConfig {
 public:
  RunConfig() {
    for (const auto& [k, v] : config_defaults()) set(k, v, "default");
  }

  void apply(const Layer& layer, const std::string& source) {
    for (const auto& [k, v] : layer) {
      if (!config_defaults().count(k)) throw ConfigError("unknown configuration key '" + k + "'");
      set(k, v, source);
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
  }
  const std::string& source(const std::string& key) const { return sources_.at(key); }

  std::uint64_t get_uint(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
      throw ConfigError(key + " must be a non-negative integer, got '" + v + "'");
    return out;
  }

  double get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t used = 0;
      double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(key + " must be a number, got '" + v + "'");
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + " must be true or false, got '" + v + "'");
  }

  EvolutionConfig evolution() const {
    EvolutionConfig c;
    c.population_size = get_uint("population_size");
    c.max_function_evaluations = get_uint("max_fe");
    c.mutation_probability = get_double("mutation_probability");
    c.crossover_probability = get_double("crossover_probability");
    c.training_case_count = get_uint("cases");
    c.elite_count = get_uint("elite_count");
    c.self_evolution_enabled = get_bool("self_evolution");
    c.seed = get_uint("seed");
    c.temperature = get_double("temperature");
    c.memory_cap = get_uint("memory_cap");
    c.jobs = std::max<std::uint64_t>(1, get_uint("jobs"));
    c.retry.max_attempts = static_cast<int>(get_uint("retry_attempts"));
    c.model = get("provider") == "live" ? get("model") : std::string();
    c.validate();
    const std::string& provider = get("provider");
    if (provider != "offline" && provider != "replay" && provider != "live")
      throw ConfigError("provider must be offline, replay or live, got '" + provider + "'");
    if (provider == "replay" && get("transcript").empty()) throw ConfigError("the replay provider needs a transcript");
    const std::string& kind = get("case_kind");
    if (kind != "static" && kind != "dynamic") throw ConfigError("case_kind must be static or dynamic");
    return c;
  }

  // Snapshot for the run directory; the API key is never written.
  nlohmann::json snapshot() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) {
      if (k == "api_key") {
        j[k] = v.empty() ? "" : "<redacted>";
        continue;
      }
      j[k] = {{"value", v}, {"source", sources_.at(k)}};
    }
    return j;
  }

 private:
  void set(const std::string& k, const std::string& v, const std::string& source) {
    values_[k] = v;
    sources_[k] = source;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> sources_;
};

// A builtin name, a rule file, or an inline expression (in that order).
inline RuleProgram resolve_rule(const std::string& spec) {
  for (const auto& n : builtin_names())
    if (n == spec) return builtin(n);
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec)) {
    std::ifstream in(spec, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_rule(ss.str());
  }
  return parse_rule(spec);
}

// Display name for a rule spec: builtin name or file stem; expressions as is.
inline std::string rule_label(const std::string& spec) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec)) return std::filesystem::path(spec).stem().string();
  return spec;
}

// "all", or a comma-separated list of rule specs.
inline std::vector<Method> resolve_methods(const std::string& list) {
  std::vector<Method> out;
  if (list == "all") return builtin_methods(builtin_names());
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    std::string item = trim(std::string_view(list).substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    if (item == "dynamic-baselines") {
      for (auto& m : builtin_methods(dynamic_baseline_names())) out.push_back(std::move(m));
      continue;
    }
    out.push_back({rule_label(item), resolve_rule(item)});
  }
  if (out.empty()) throw ConfigError("no rules selected");
  return out;
}

// One row per operation: job,op,machine,start,end.
inline std::string gantt_csv(const Instance& inst, const Schedule& sched) {
  std::string out = "instance,job,op,machine,start,end\n";
  std::vector<ScheduledOp> rows = sched.entries;
  std::sort(rows.begin(), rows.end(), [](const ScheduledOp& a, const ScheduledOp& b) {
    return std::tie(a.machine_id, a.start, a.job_id) < std::tie(b.machine_id, b.start, b.job_id);
  });
  for (const auto& e : rows)
    out += inst.name() + "," + std::to_string(e.job_id) + "," + std::to_string(e.op_index) + "," +
           std::to_string(e.machine_id) + "," + std::to_string(e.start) + "," + std::to_string(e.end) + "\n";
  return out;
}

}  // namespace seevo::cli
