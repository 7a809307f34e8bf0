#pragma once

// Benchmark instances, random case generators and baseline sweeps with
// gap-ratio reporting.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seevo/core.hpp"
#include "seevo/evolve.hpp"
#include "seevo/rulelang.hpp"
#include "seevo/simulator.hpp"

namespace seevo {

// ---------------------------------------------------------------------------
// Generators

struct StaticGenParams {
  std::size_t min_jobs = 20, max_jobs = 100;
  std::size_t min_machines = 10, max_machines = 20;
  Time min_processing = 50, max_processing = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (min_jobs < 1 || min_jobs > max_jobs) throw ConfigError("invalid job count range");
    if (min_machines < 1 || min_machines > max_machines) throw ConfigError("invalid machine count range");
    if (min_processing < 0 || min_processing > max_processing) throw ConfigError("invalid processing time range");
  }
};

struct DynamicGenParams {
  std::size_t machine_count = 10;
  std::size_t min_batches = 2, max_batches = 3;
  std::size_t min_batch_size = 20, max_batch_size = 50;
  Time first_batch_arrival = 0;
  Time window1_lo = 1, window1_hi = 500;     // batch 2
  Time window2_lo = 501, window2_hi = 1000;  // batch 3
  Time min_processing = 50, max_processing = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (machine_count < 1) throw ConfigError("machine_count must be >= 1");
    if (min_batches < 1 || min_batches > max_batches || max_batches > 3)
      throw ConfigError("batch count range must lie within [1, 3]");
    if (min_batch_size < 1 || min_batch_size > max_batch_size) throw ConfigError("invalid batch size range");
    if (window1_lo > window1_hi || window2_lo > window2_hi || window1_hi >= window2_lo || window1_lo < 0)
      throw ConfigError("arrival windows must be ordered and disjoint");
    if (min_processing < 0 || min_processing > max_processing) throw ConfigError("invalid processing time range");
  }
};

namespace detail {

inline std::size_t draw(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

// Fisher-Yates over all machines.
inline std::vector<std::size_t> machine_permutation(SplitMix64& rng, std::size_t machines) {
  std::vector<std::size_t> order(machines);
  for (std::size_t i = 0; i < machines; ++i) order[i] = i;
  for (std::size_t i = machines; i > 1; --i) std::swap(order[i - 1], order[draw(rng, 0, i - 1)]);
  return order;
}

inline std::vector<std::pair<std::size_t, Time>> random_route(SplitMix64& rng, std::size_t machines, Time lo,
                                                              Time hi) {
  std::vector<std::pair<std::size_t, Time>> route;
  for (std::size_t m : machine_permutation(rng, machines)) route.emplace_back(m, rng.uniform_int(lo, hi));
  return route;
}

}  // namespace detail

inline Instance generate_static_case(const StaticGenParams& p) {
  p.validate();
  SplitMix64 rng(p.seed);
  std::size_t jobs = detail::draw(rng, p.min_jobs, p.max_jobs);
  std::size_t machines = detail::draw(rng, p.min_machines, p.max_machines);
  std::vector<std::vector<std::pair<std::size_t, Time>>> routes;
  for (std::size_t j = 0; j < jobs; ++j)
    routes.push_back(detail::random_route(rng, machines, p.min_processing, p.max_processing));
  return Instance("static-" + std::to_string(p.seed), machines, std::move(routes));
}

struct Batch {
  Time arrival = 0;
  std::size_t first_job = 0;
  std::size_t size = 0;
};

struct DynamicCase {
  Instance instance;
  std::vector<Batch> batches;
  DynamicGenParams params;
};

inline DynamicCase generate_dynamic_case_detailed(const DynamicGenParams& p) {
  p.validate();
  SplitMix64 rng(p.seed);
  std::size_t batch_count = detail::draw(rng, p.min_batches, p.max_batches);
  std::vector<std::vector<std::pair<std::size_t, Time>>> routes;
  std::vector<Time> arrivals;
  std::vector<Batch> batches;
  for (std::size_t b = 0; b < batch_count; ++b) {
    Batch batch;
    batch.size = detail::draw(rng, p.min_batch_size, p.max_batch_size);
    batch.first_job = routes.size();
    if (b == 0) batch.arrival = p.first_batch_arrival;
    else if (b == 1) batch.arrival = rng.uniform_int(p.window1_lo, p.window1_hi);
    else batch.arrival = rng.uniform_int(p.window2_lo, p.window2_hi);
    for (std::size_t j = 0; j < batch.size; ++j) {
      routes.push_back(detail::random_route(rng, p.machine_count, p.min_processing, p.max_processing));
      arrivals.push_back(batch.arrival);
    }
    batches.push_back(batch);
  }
  Instance inst("dynamic-" + std::to_string(p.seed), p.machine_count, std::move(routes), std::move(arrivals));
  return {std::move(inst), std::move(batches), p};
}

inline Instance generate_dynamic_case(const DynamicGenParams& p) { return generate_dynamic_case_detailed(p).instance; }

// ---------------------------------------------------------------------------
// Dynamic sidecar documents

inline nlohmann::json to_json(const DynamicGenParams& p) {
  return {{"machine_count", p.machine_count},
          {"batch_count_range", {p.min_batches, p.max_batches}},
          {"batch_size_range", {p.min_batch_size, p.max_batch_size}},
          {"first_batch_arrival", p.first_batch_arrival},
          {"arrival_window_1", {p.window1_lo, p.window1_hi}},
          {"arrival_window_2", {p.window2_lo, p.window2_hi}},
          {"processing_time_range", {p.min_processing, p.max_processing}},
          {"seed", p.seed}};
}

inline nlohmann::json dynamic_sidecar(const DynamicCase& c) {
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : c.batches) {
    nlohmann::json jobs = nlohmann::json::array();
    for (std::size_t j = b.first_job; j < b.first_job + b.size; ++j) {
      nlohmann::json route = nlohmann::json::array();
      for (const auto& op : c.instance.route(j)) route.push_back({op.machine_id, op.processing_time});
      jobs.push_back(route);
    }
    batches.push_back({{"arrival", b.arrival}, {"jobs", jobs}});
  }
  return {{"name", c.instance.name()},
          {"machine_count", c.instance.machine_count()},
          {"batches", batches},
          {"seed", c.params.seed},
          {"params", to_json(c.params)},
          {"note", "the first batch arrives at time 0; later batches draw from the two arrival windows"}};
}

// Builds an instance from a sidecar document. Errors name the offending path.
inline Instance load_dynamic_sidecar(const nlohmann::json& j, std::string name = {}) {
  auto fail = [](const std::string& what) -> Instance { throw InstanceFormatError(0, "sidecar: " + what); };
  if (!j.is_object()) return fail("document is not an object");
  auto non_negative = [](const nlohmann::json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
  if (!j.contains("machine_count") || !non_negative(j["machine_count"]))
    return fail("machine_count missing or not a non-negative integer");
  if (!j.contains("batches") || !j["batches"].is_array()) return fail("batches missing");
  std::size_t machines = j["machine_count"].get<std::size_t>();
  std::vector<std::vector<std::pair<std::size_t, Time>>> routes;
  std::vector<Time> arrivals;
  for (std::size_t b = 0; b < j["batches"].size(); ++b) {
    const auto& batch = j["batches"][b];
    std::string where = "batches[" + std::to_string(b) + "]";
    if (!batch.contains("arrival") || !batch["arrival"].is_number_integer()) return fail(where + ".arrival missing");
    if (!batch.contains("jobs") || !batch["jobs"].is_array()) return fail(where + ".jobs missing");
    for (const auto& job : batch["jobs"]) {
      std::vector<std::pair<std::size_t, Time>> route;
      for (const auto& op : job) {
        if (!op.is_array() || op.size() != 2 || !non_negative(op[0]) || !op[1].is_number_integer())
          return fail(where + " has a malformed operation " + op.dump());
        route.emplace_back(op[0].get<std::size_t>(), op[1].get<Time>());
      }
      routes.push_back(std::move(route));
      arrivals.push_back(batch["arrival"].get<Time>());
    }
  }
  if (name.empty()) name = j.value("name", "dynamic");
  try {
    return Instance(std::move(name), machines, std::move(routes), std::move(arrivals));
  } catch (const std::invalid_argument& e) {
    return fail(e.what());
  }
}

// Static files use the standard text format; `.json` files are sidecars.
inline Instance load_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string name = path.stem().string();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw InstanceFormatError(0, std::string("sidecar: ") + e.what());
    }
    return load_dynamic_sidecar(j, name);
  }
  return load_instance(ss.str(), name);
}

// Serves generated cases; case i uses seed derive_seed(root, i).
class GeneratedCaseSource : public CaseSource {
 public:
  enum class Kind { Static, Dynamic };

  GeneratedCaseSource(Kind kind, std::uint64_t root_seed, StaticGenParams stat = {}, DynamicGenParams dyn = {})
      : kind_(kind), root_(root_seed), static_(stat), dynamic_(dyn) {}

  TrainingCase next() override {
    std::uint64_t id = counter_++;
    std::uint64_t seed = derive_seed(root_, id);
    if (kind_ == Kind::Static) {
      StaticGenParams p = static_;
      p.seed = seed;
      return {id, generate_static_case(p)};
    }
    DynamicGenParams p = dynamic_;
    p.seed = seed;
    return {id, generate_dynamic_case(p)};
  }

 private:
  Kind kind_;
  std::uint64_t root_;
  StaticGenParams static_;
  DynamicGenParams dynamic_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Benchmark sets

// Best-known makespans for the 32 benchmark cases used in the experiments.
inline std::optional<Time> known_upper_bound(std::string_view name) {
  static const std::map<std::string, Time, std::less<>> table = {
      {"DMU03", 2731}, {"DMU04", 2669}, {"DMU08", 3188}, {"DMU09", 3092}, {"DMU13", 3681}, {"DMU14", 3394},
      {"DMU18", 3844}, {"DMU19", 3768}, {"DMU23", 4668}, {"DMU24", 4648}, {"DMU28", 4692}, {"DMU29", 4691},
      {"DMU33", 5728}, {"DMU34", 5385}, {"DMU38", 5713}, {"DMU39", 5747}, {"TA01", 1231},  {"TA02", 1244},
      {"TA11", 1357},  {"TA12", 1367},  {"TA21", 1642},  {"TA22", 1600},  {"TA31", 1764},  {"TA32", 1784},
      {"TA41", 2005},  {"TA42", 1937},  {"TA51", 2760},  {"TA52", 2756},  {"TA61", 2868},  {"TA62", 2869},
      {"TA71", 5464},  {"TA72", 5181}};
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct BenchmarkSet {
  std::vector<Instance> instances;  // sorted by name
  std::vector<std::string> errors;  // one per unreadable file
  std::vector<std::string> warnings;
};

// Loads every regular file in `dir` whose stem matches `filter`
// (case-insensitive regex search; empty matches all).
inline BenchmarkSet load_benchmark_set(const std::filesystem::path& dir, const std::string& filter = {}) {
  BenchmarkSet set;
  if (!std::filesystem::is_directory(dir)) {
    set.errors.push_back(dir.string() + ": not a directory");
    return set;
  }
  std::regex re(filter.empty() ? std::string(".*") : filter, std::regex::icase | std::regex::ECMAScript);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && std::regex_search(entry.path().stem().string(), re)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      set.instances.push_back(load_instance_file(f));
    } catch (const InstanceFormatError& e) {
      set.errors.push_back(f.filename().string() + ":" + std::to_string(e.line()) + ": " + e.what());
    } catch (const std::exception& e) {
      set.errors.push_back(f.filename().string() + ": " + e.what());
    }
  }
  std::sort(set.instances.begin(), set.instances.end(),
            [](const Instance& a, const Instance& b) { return a.name() < b.name(); });
  if (set.instances.empty() && set.errors.empty())
    set.warnings.push_back("no instances found in " + dir.string() + (filter.empty() ? "" : " matching '" + filter + "'"));
  return set;
}

// ---------------------------------------------------------------------------
// Baseline sweeps

struct Method {
  std::string name;
  RuleProgram rule;
};

inline std::vector<Method> builtin_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back({n, builtin(n)});
  return out;
}

// The nine rules compared in the dynamic experiments.
inline std::vector<std::string> dynamic_baseline_names() {
  return {"SPT", "TWKR_MOST", "SRM", "SSO", "LPT", "LPT_TWK", "SPT_TWK", "SPT_PLUS_SSO", "SPT_LSO"};
}

struct BenchReport {
  std::vector<std::string> cases;
  std::vector<std::string> methods;
  std::vector<std::vector<std::optional<Time>>> makespans;  // [case][method]
  std::vector<std::optional<Time>> best;                    // per case, over present cells
  std::vector<std::vector<std::optional<double>>> gaps;     // (makespan - best) / best
  std::vector<std::optional<double>> mean_makespan;         // per method, over present cells
  std::vector<std::optional<double>> mean_gap;
  std::vector<std::string> failures;                        // "case / method: reason"

  std::size_t method_index(std::string_view name) const {
    auto it = std::find(methods.begin(), methods.end(), name);
    if (it == methods.end()) throw std::out_of_range("no method " + std::string(name));
    return static_cast<std::size_t>(it - methods.begin());
  }

  // Fills best, gaps and means from makespans.
  void finalize() {
    const std::size_t nc = cases.size(), nm = methods.size();
    best.assign(nc, std::nullopt);
    gaps.assign(nc, std::vector<std::optional<double>>(nm));
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t m = 0; m < nm; ++m)
        if (makespans[c][m] && (!best[c] || *makespans[c][m] < *best[c])) best[c] = makespans[c][m];
      if (!best[c]) continue;
      for (std::size_t m = 0; m < nm; ++m)
        if (makespans[c][m])
          gaps[c][m] = *best[c] == 0 ? 0.0
                                     : static_cast<double>(*makespans[c][m] - *best[c]) / static_cast<double>(*best[c]);
    }
    mean_makespan.assign(nm, std::nullopt);
    mean_gap.assign(nm, std::nullopt);
    for (std::size_t m = 0; m < nm; ++m) {
      double span_sum = 0.0, gap_sum = 0.0;
      std::size_t n = 0;
      for (std::size_t c = 0; c < nc; ++c) {
        if (!makespans[c][m]) continue;
        span_sum += static_cast<double>(*makespans[c][m]);
        gap_sum += *gaps[c][m];
        ++n;
      }
      if (n > 0) {
        mean_makespan[m] = span_sum / static_cast<double>(n);
        mean_gap[m] = gap_sum / static_cast<double>(n);
      }
    }
  }

  // Makespan table with a trailing Mean row; empty cells mark failures.
  std::string to_csv(char delim = ',') const {
    std::string out = "case";
    for (const auto& m : methods) out += delim + m;
    out += delim + std::string("best\n");
    for (std::size_t c = 0; c < cases.size(); ++c) {
      out += cases[c];
      for (const auto& v : makespans[c]) out += delim + (v ? std::to_string(*v) : std::string());
      out += delim + (best[c] ? std::to_string(*best[c]) : std::string()) + "\n";
    }
    out += "Mean";
    for (const auto& v : mean_makespan) out += delim + (v ? fixed(*v, 2) : std::string());
    out += delim + std::string("\n");
    return out;
  }

  std::string gaps_csv(char delim = ',') const {
    std::string out = "case";
    for (const auto& m : methods) out += delim + m;
    out += "\n";
    for (std::size_t c = 0; c < cases.size(); ++c) {
      out += cases[c];
      for (const auto& v : gaps[c]) out += delim + (v ? fixed(*v, 6) : std::string());
      out += "\n";
    }
    out += "Mean";
    for (const auto& v : mean_gap) out += delim + (v ? fixed(*v, 6) : std::string());
    out += "\n";
    return out;
  }

  // Per-case gaps per method for external plotting.
  nlohmann::json plot_data() const {
    nlohmann::json series = nlohmann::json::object();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      nlohmann::json values = nlohmann::json::array();
      for (std::size_t c = 0; c < cases.size(); ++c)
        values.push_back(gaps[c][m] ? nlohmann::json(*gaps[c][m]) : nlohmann::json());
      series[methods[m]] = values;
    }
    nlohmann::json means = nlohmann::json::object();
    for (std::size_t m = 0; m < methods.size(); ++m)
      means[methods[m]] = mean_gap[m] ? nlohmann::json(*mean_gap[m]) : nlohmann::json();
    return {{"metric", "gap_ratio"}, {"cases", cases}, {"methods", methods}, {"gaps", series}, {"mean_gap", means}};
  }

 private:
  static std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
  }
};

// Simulates every (instance, method) cell. Cell (i, m) uses the simulation
// seed derive_seed(seed, i) so every method sees the same random stream.
inline BenchReport run_baselines(const std::vector<Instance>& instances, const std::vector<Method>& methods,
                                 std::uint64_t seed = 0, std::size_t jobs = 1) {
  if (instances.empty()) throw ConfigError("no instances to run");
  if (methods.empty()) throw ConfigError("no methods to run");
  BenchReport r;
  for (const auto& inst : instances) r.cases.push_back(inst.name());
  for (const auto& m : methods) r.methods.push_back(m.name);
  const std::size_t nm = methods.size();
  r.makespans.assign(instances.size(), std::vector<std::optional<Time>>(nm));
  std::vector<std::string> errors(instances.size() * nm);
  parallel_for(instances.size() * nm, jobs, [&](std::size_t cell) {
    std::size_t c = cell / nm, m = cell % nm;
    try {
      r.makespans[c][m] = simulate(instances[c], methods[m].rule, derive_seed(seed, c)).makespan;
    } catch (const RuleEvalError& e) {
      errors[cell] = e.what();
    }
  });
  for (std::size_t cell = 0; cell < errors.size(); ++cell)
    if (!errors[cell].empty())
      r.failures.push_back(r.cases[cell / nm] + " / " + r.methods[cell % nm] + ": " + errors[cell]);
  r.finalize();
  return r;
}

}  // namespace seevo
