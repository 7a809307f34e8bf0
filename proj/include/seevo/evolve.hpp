#pragma once

// Population self-evolution of dispatching rules.
//
// One iteration runs three generate/evaluate/update rounds:
//   1. random parent pairs -> comparative (co-evolution) reflection -> crossover
//   2. per-offspring before/after (self-evolution) reflection -> refinement
//   3. collective reflection over the iteration's reflections -> elite mutation
// Round 2 is skipped when self-evolution is disabled. After each round the
// elite is carried over and the best-so-far rule is updated.

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "seevo/core.hpp"
#include "seevo/llm.hpp"
#include "seevo/rulelang.hpp"
#include "seevo/simulator.hpp"

namespace seevo {

class EvolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AllIndividualsInvalid : public EvolutionError {
 public:
  AllIndividualsInvalid() : EvolutionError("All individuals are invalid") {}
};

class SelectionFailed : public EvolutionError {
 public:
  SelectionFailed() : EvolutionError("Selection Failed") {}
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kInvalidFitness = std::numeric_limits<double>::infinity();

struct EvolutionConfig {
  std::size_t population_size = 20;
  std::size_t max_function_evaluations = 20;  // iterations of the main loop
  double mutation_probability = 0.5;
  double crossover_probability = 1.0;
  std::size_t training_case_count = 20;
  std::size_t elite_count = 1;
  bool self_evolution_enabled = true;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t memory_cap = 10;
  std::size_t jobs = 1;  // evaluation threads
  RetryPolicy retry;
  std::string model;

  void validate() const {
    if (population_size < 1) throw ConfigError("population_size must be >= 1");
    if (training_case_count < 1) throw ConfigError("training_case_count must be >= 1");
    if (elite_count < 1) throw ConfigError("elite_count must be >= 1");
    if (memory_cap < 1) throw ConfigError("memory_cap must be >= 1");
    if (mutation_probability < 0.0 || mutation_probability > 1.0)
      throw ConfigError("mutation_probability must be in [0, 1]");
    if (crossover_probability < 0.0 || crossover_probability > 1.0)
      throw ConfigError("crossover_probability must be in [0, 1]");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (retry.max_attempts < 1) throw ConfigError("retry attempts must be >= 1");
  }
};

inline nlohmann::json to_json(const EvolutionConfig& c) {
  return {{"population_size", c.population_size},
          {"max_function_evaluations", c.max_function_evaluations},
          {"mutation_probability", c.mutation_probability},
          {"crossover_probability", c.crossover_probability},
          {"training_case_count", c.training_case_count},
          {"elite_count", c.elite_count},
          {"self_evolution_enabled", c.self_evolution_enabled},
          {"seed", c.seed},
          {"temperature", c.temperature},
          {"memory_cap", c.memory_cap},
          {"retry_attempts", c.retry.max_attempts},
          {"model", c.model}};
}

enum class Origin { Seed, Init, Crossover, SelfCrossover, Mutation, Trained };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Seed: return "seed";
    case Origin::Init: return "init";
    case Origin::Crossover: return "crossover";
    case Origin::SelfCrossover: return "self-crossover";
    case Origin::Mutation: return "mutation";
    case Origin::Trained: return "trained";
  }
  return "?";
}

struct Individual {
  std::uint64_t id = 0;
  std::string source;                // rule text as produced (or extracted)
  std::optional<RuleProgram> rule;   // empty when the source failed to parse
  std::string diagnostic;            // why the individual is invalid
  std::vector<Time> makespans;       // one per current training case
  double fitness = kInvalidFitness;  // mean makespan; +inf when invalid
  bool evaluated = false;
  std::size_t birth = 0;
  Origin origin = Origin::Init;
  std::vector<std::uint64_t> parents;

  bool valid() const noexcept { return rule.has_value() && std::isfinite(fitness); }
};

using Population = std::vector<Individual>;

inline nlohmann::json to_json(const Individual& ind) {
  nlohmann::json j = {{"id", ind.id},
                      {"source", ind.rule ? ind.rule->canonical() : ind.source},
                      {"fitness", std::isfinite(ind.fitness) ? nlohmann::json(ind.fitness) : nlohmann::json()},
                      {"valid", ind.valid()},
                      {"origin", to_string(ind.origin)},
                      {"birth", ind.birth},
                      {"parents", ind.parents}};
  if (!ind.diagnostic.empty()) j["diagnostic"] = ind.diagnostic;
  return j;
}

inline nlohmann::json to_json(const Population& pop) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ind : pop) arr.push_back(to_json(ind));
  return arr;
}

// Lower fitness first, then lower id.
inline bool fitter(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return a.id < b.id;
}

struct TrainingCase {
  std::uint64_t id = 0;
  Instance instance;
};

// Supplies the initial training cases and one replacement per iteration.
class CaseSource {
 public:
  virtual ~CaseSource() = default;
  virtual TrainingCase next() = 0;
};

// Serves a fixed list in order, cycling when exhausted.
class ListCaseSource : public CaseSource {
 public:
  explicit ListCaseSource(std::vector<Instance> cases) : cases_(std::move(cases)) {
    if (cases_.empty()) throw ConfigError("case list is empty");
  }
  TrainingCase next() override {
    std::uint64_t id = counter_++;
    return {id, cases_[id % cases_.size()]};
  }

 private:
  std::vector<Instance> cases_;
  std::uint64_t counter_ = 0;
};

struct ReflectionRecord {
  RequestKind kind = RequestKind::CoReflect;
  std::vector<std::uint64_t> subjects;
  std::string prompt;
  std::string response;
  std::string error;
  std::size_t iteration = 0;
};

inline std::string_view reflection_kind_name(RequestKind k) {
  switch (k) {
    case RequestKind::CoReflect: return "co-evolution";
    case RequestKind::SelfReflect: return "self-evolution";
    case RequestKind::Collective: return "collective";
    default: return to_string(k);
  }
}

inline nlohmann::json to_json(const ReflectionRecord& r) {
  nlohmann::json j = {{"kind", reflection_kind_name(r.kind)},
                      {"subjects", r.subjects},
                      {"iteration", r.iteration},
                      {"prompt", r.prompt},
                      {"response", r.response}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

struct StageSnapshot {
  std::string stage;
  nlohmann::json population;
  double best_fitness = kInvalidFitness;  // best-so-far after the stage
  std::size_t generations = 0;            // provider generation requests in the stage
};

struct IterationLog {
  std::size_t iteration = 0;
  std::vector<StageSnapshot> stages;
  std::vector<ReflectionRecord> reflections;
  double best_fitness = kInvalidFitness;
  std::string best_source;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> case_rotation;  // (removed, added)

  const StageSnapshot* stage(std::string_view name) const {
    for (const auto& s : stages)
      if (s.stage == name) return &s;
    return nullptr;
  }

  std::size_t generations() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.generations;
    return n;
  }
};

inline nlohmann::json to_json(const IterationLog& log) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : log.stages)
    stages.push_back({{"stage", s.stage},
                      {"best_fitness", std::isfinite(s.best_fitness) ? nlohmann::json(s.best_fitness) : nlohmann::json()},
                      {"generations", s.generations},
                      {"population", s.population}});
  nlohmann::json reflections = nlohmann::json::array();
  for (const auto& r : log.reflections) reflections.push_back(to_json(r));
  nlohmann::json j = {{"iteration", log.iteration},
                      {"best_fitness", std::isfinite(log.best_fitness) ? nlohmann::json(log.best_fitness) : nlohmann::json()},
                      {"best_source", log.best_source},
                      {"stages", stages},
                      {"reflections", reflections}};
  if (log.case_rotation)
    j["case_rotation"] = {{"removed", log.case_rotation->first}, {"added", log.case_rotation->second}};
  return j;
}

// What the online phase needs from a training run.
struct TrainedArtifacts {
  std::string best_source;
  double best_fitness = kInvalidFitness;
  std::vector<std::string> population;
  std::vector<std::string> memory;
  std::vector<std::string> seeds;
  std::string prompt_version;

  bool empty() const noexcept { return best_source.empty() && population.empty(); }
};

inline nlohmann::json to_json(const TrainedArtifacts& a) {
  return {{"best_source", a.best_source},
          {"best_fitness", std::isfinite(a.best_fitness) ? nlohmann::json(a.best_fitness) : nlohmann::json()},
          {"population", a.population},
          {"memory", a.memory},
          {"seeds", a.seeds},
          {"prompt_version", a.prompt_version}};
}

inline TrainedArtifacts trained_artifacts_from_json(const nlohmann::json& j) {
  TrainedArtifacts a;
  a.best_source = j.value("best_source", "");
  if (j.contains("best_fitness") && j["best_fitness"].is_number()) a.best_fitness = j["best_fitness"].get<double>();
  a.population = j.value("population", std::vector<std::string>{});
  a.memory = j.value("memory", std::vector<std::string>{});
  a.seeds = j.value("seeds", std::vector<std::string>{});
  a.prompt_version = j.value("prompt_version", "");
  return a;
}

struct RunResult {
  Individual best;
  std::vector<IterationLog> logs;
  Population population;
  TrainedArtifacts artifacts;
};

// ---------------------------------------------------------------------------
// Evaluation

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

inline std::uint64_t case_seed(std::uint64_t seed, std::uint64_t case_id) { return derive_seed(seed, case_id); }

// Fitness is the mean makespan over the cases. Individuals that fail to
// parse or raise RuleEvalError get +inf. Already-evaluated individuals are
// left untouched.
inline void evaluate_population(Population& pop, std::span<const TrainingCase> cases, std::uint64_t seed,
                                std::size_t jobs = 1) {
  if (cases.empty()) throw ConfigError("evaluation needs at least one case");
  std::vector<Individual*> pending;
  for (auto& ind : pop) {
    if (ind.evaluated) continue;
    if (!ind.rule) {
      ind.fitness = kInvalidFitness;
      ind.makespans.clear();
      ind.evaluated = true;
      continue;
    }
    ind.makespans.assign(cases.size(), -1);
    pending.push_back(&ind);
  }
  std::vector<std::string> errors(pending.size() * cases.size());
  parallel_for(pending.size() * cases.size(), jobs, [&](std::size_t cell) {
    std::size_t i = cell / cases.size(), c = cell % cases.size();
    try {
      pending[i]->makespans[c] = simulate(cases[c].instance, *pending[i]->rule, case_seed(seed, cases[c].id)).makespan;
    } catch (const RuleEvalError& e) {
      errors[cell] = e.what();
    }
  });
  for (std::size_t i = 0; i < pending.size(); ++i) {
    Individual& ind = *pending[i];
    ind.evaluated = true;
    std::string first_error;
    for (std::size_t c = 0; c < cases.size() && first_error.empty(); ++c) first_error = errors[i * cases.size() + c];
    if (!first_error.empty()) {
      ind.fitness = kInvalidFitness;
      ind.diagnostic = first_error;
      continue;
    }
    double sum = 0.0;
    for (Time t : ind.makespans) sum += static_cast<double>(t);
    ind.fitness = sum / static_cast<double>(ind.makespans.size());
  }
}

// ---------------------------------------------------------------------------
// Engine

struct ParentPair {
  Individual better;
  Individual worse;
};

class Engine {
 public:
  using BestCallback = std::function<void(const Individual&, std::size_t iteration, std::string_view stage)>;

  Engine(EvolutionConfig cfg, LlmClient& llm, std::vector<TrainingCase> cases)
      : cfg_(std::move(cfg)), llm_(llm), cases_(cases.begin(), cases.end()) {
    cfg_.validate();
    if (cases_.empty()) throw ConfigError("at least one training case is required");
    best_.fitness = kInvalidFitness;
  }

  const EvolutionConfig& config() const noexcept { return cfg_; }
  const Population& population() const noexcept { return population_; }
  void set_population(Population pop) { population_ = std::move(pop); }
  const Individual& best() const noexcept { return best_; }
  const std::deque<std::string>& memory() const noexcept { return memory_; }
  void set_memory(std::vector<std::string> memory) {
    memory_.assign(memory.begin(), memory.end());
    while (memory_.size() > cfg_.memory_cap) memory_.pop_back();
  }
  std::vector<TrainingCase> cases() const { return {cases_.begin(), cases_.end()}; }
  void on_best(BestCallback cb) { on_best_ = std::move(cb); }

  // --- building blocks -----------------------------------------------------

  Individual make_individual(std::string source, Origin origin, std::vector<std::uint64_t> parents = {}) {
    Individual ind;
    ind.id = next_id_++;
    ind.birth = iteration_;
    ind.origin = origin;
    ind.parents = std::move(parents);
    ind.source = std::move(source);
    try {
      ind.rule = parse_rule(ind.source);
    } catch (const ParseError& e) {
      ind.diagnostic = e.what();
    }
    return ind;
  }

  Individual from_response(const LlmClient::Reply& reply, Origin origin, std::vector<std::uint64_t> parents) {
    if (!reply.completion.ok()) {
      Individual ind = make_individual("", origin, std::move(parents));
      ind.rule.reset();
      ind.diagnostic = "provider failure: " + reply.completion.error;
      return ind;
    }
    return make_individual(extract_rule(reply.completion.text), origin, std::move(parents));
  }

  Population init_population(const std::vector<RuleProgram>& seeds) {
    if (seeds.empty()) throw ConfigError("at least one seed heuristic is required");
    Population pop;
    std::string seed_text;
    std::vector<std::string> seed_sources;
    for (const auto& s : seeds) {
      pop.push_back(make_individual(s.canonical(), Origin::Seed));
      seed_sources.push_back(s.canonical());
      seed_text += "```\n" + s.canonical() + "\n```\n";
    }
    PromptValues values{{"seeds", seed_text}};
    while (pop.size() < cfg_.population_size) {
      auto reply = llm_.ask(RequestKind::Init, values, seed_sources);
      pop.push_back(from_response(reply, Origin::Init, {}));
    }
    return pop;
  }

  void evaluate(Population& pop) const {
    std::vector<TrainingCase> cases(cases_.begin(), cases_.end());
    evaluate_population(pop, cases, cfg_.seed, cfg_.jobs);
  }

  std::vector<ParentPair> select_pairs(const Population& pop, SplitMix64& rng) const {
    std::vector<const Individual*> valid;
    for (const auto& ind : pop)
      if (ind.valid()) valid.push_back(&ind);
    if (valid.size() < 2) throw SelectionFailed();
    std::size_t count = std::max<std::size_t>(1, cfg_.population_size / 2);
    std::vector<ParentPair> pairs;
    auto last = static_cast<std::int64_t>(valid.size()) - 1;
    for (std::size_t p = 0; p < count; ++p) {
      auto a = static_cast<std::size_t>(rng.uniform_int(0, last));
      auto b = static_cast<std::size_t>(rng.uniform_int(0, last - 1));
      if (b >= a) ++b;
      const Individual* x = valid[a];
      const Individual* y = valid[b];
      if (fitter(*y, *x)) std::swap(x, y);
      pairs.push_back({*x, *y});
    }
    return pairs;
  }

  std::string cases_summary() const {
    std::size_t min_jobs = SIZE_MAX, max_jobs = 0, min_m = SIZE_MAX, max_m = 0;
    for (const auto& c : cases_) {
      min_jobs = std::min(min_jobs, c.instance.job_count());
      max_jobs = std::max(max_jobs, c.instance.job_count());
      min_m = std::min(min_m, c.instance.machine_count());
      max_m = std::max(max_m, c.instance.machine_count());
    }
    auto range = [](std::size_t lo, std::size_t hi) {
      return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
    };
    return std::to_string(cases_.size()) + " training cases (" + range(min_jobs, max_jobs) + " jobs, " +
           range(min_m, max_m) + " machines)";
  }

  ReflectionRecord coevolution_reflect(const ParentPair& pair) {
    PromptValues values{{"cases", cases_summary()},
                        {"better_source", source_of(pair.better)},
                        {"better_fitness", format_fitness(pair.better.fitness)},
                        {"worse_source", source_of(pair.worse)},
                        {"worse_fitness", format_fitness(pair.worse.fitness)}};
    auto reply = llm_.ask(RequestKind::CoReflect, values, {source_of(pair.better), source_of(pair.worse)});
    return record(RequestKind::CoReflect, {pair.better.id, pair.worse.id}, reply);
  }

  // One offspring per pair (subject to crossover_probability). Returns the
  // offspring; `offspring_of[i]` maps pair i to its offspring index or -1.
  Population crossover(const std::vector<ParentPair>& pairs, const std::vector<ReflectionRecord>& reflections,
                       SplitMix64& rng, std::vector<std::ptrdiff_t>* offspring_of = nullptr) {
    Population out;
    if (offspring_of) offspring_of->assign(pairs.size(), -1);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (cfg_.crossover_probability < 1.0 && rng.uniform() >= cfg_.crossover_probability) continue;
      const auto& pair = pairs[i];
      PromptValues values{{"cases", cases_summary()},
                          {"better_source", source_of(pair.better)},
                          {"better_fitness", format_fitness(pair.better.fitness)},
                          {"worse_source", source_of(pair.worse)},
                          {"worse_fitness", format_fitness(pair.worse.fitness)},
                          {"reflection", i < reflections.size() ? reflections[i].response : std::string()}};
      auto reply = llm_.ask(RequestKind::Crossover, values, {source_of(pair.better), source_of(pair.worse)});
      if (offspring_of) (*offspring_of)[i] = static_cast<std::ptrdiff_t>(out.size());
      out.push_back(from_response(reply, Origin::Crossover, {pair.better.id, pair.worse.id}));
    }
    return out;
  }

  ReflectionRecord self_evolution_reflect(const Individual& before, const Individual& after) {
    bool improved = after.fitness < before.fitness;
    PromptValues values{{"cases", cases_summary()},
                        {"before_source", source_of(before)},
                        {"before_fitness", format_fitness(before.fitness)},
                        {"after_source", source_of(after)},
                        {"after_fitness", format_fitness(after.fitness)},
                        {"outcome", improved ? "improved" : "worsened or stagnant"},
                        {"direction", improved ? llm_.bundle().self_reflect_better : llm_.bundle().self_reflect_worse}};
    auto reply = llm_.ask(RequestKind::SelfReflect, values, {source_of(before), source_of(after)});
    return record(RequestKind::SelfReflect, {before.id, after.id}, reply);
  }

  // One refined individual per (individual, self-reflection).
  Population self_crossover(const std::vector<std::pair<Individual, ReflectionRecord>>& items) {
    Population out;
    if (!cfg_.self_evolution_enabled) return out;
    for (const auto& [ind, reflection] : items) {
      PromptValues values{{"cases", cases_summary()},
                          {"source", source_of(ind)},
                          {"fitness", format_fitness(ind.fitness)},
                          {"reflection", reflection.response}};
      auto reply = llm_.ask(RequestKind::SelfCrossover, values, {source_of(ind)});
      out.push_back(from_response(reply, Origin::SelfCrossover, {ind.id}));
    }
    return out;
  }

  // Synthesizes the iteration's reflections into long-term guidance and
  // returns the current guidance text (newest synthesis first).
  std::string collective_reflect(const std::vector<ReflectionRecord>& history, ReflectionRecord* out = nullptr) {
    std::string reflections;
    for (const auto& r : history)
      if (!r.response.empty()) reflections += "- " + r.response + "\n";
    if (!reflections.empty()) {
      PromptValues values{{"memory", memory_text()}, {"reflections", reflections}};
      auto reply = llm_.ask(RequestKind::Collective, values);
      ReflectionRecord rec = record(RequestKind::Collective, {}, reply);
      if (reply.completion.ok() && !trim(reply.completion.text).empty()) {
        memory_.push_front(trim(reply.completion.text));
        while (memory_.size() > cfg_.memory_cap) memory_.pop_back();
      }
      if (out) *out = std::move(rec);
    }
    return memory_text();
  }

  Population mutate(const Population& pop, const std::string& guidance, SplitMix64& rng) {
    const Individual* elite = nullptr;
    for (const auto& ind : pop)
      if (ind.valid() && (!elite || fitter(ind, *elite))) elite = &ind;
    if (!elite) throw AllIndividualsInvalid();
    Population out;
    PromptValues values{{"cases", cases_summary()},
                        {"elite_source", source_of(*elite)},
                        {"elite_fitness", format_fitness(elite->fitness)},
                        {"memory", guidance}};
    for (std::size_t slot = 0; slot < cfg_.population_size; ++slot) {
      if (rng.uniform() >= cfg_.mutation_probability) continue;
      auto reply = llm_.ask(RequestKind::Mutate, values, {source_of(*elite)});
      out.push_back(from_response(reply, Origin::Mutation, {elite->id}));
    }
    return out;
  }

  // Elites of `pop`: the best elite_count valid individuals.
  Population elites(const Population& pop) const {
    Population valid;
    for (const auto& ind : pop)
      if (ind.valid()) valid.push_back(ind);
    std::sort(valid.begin(), valid.end(), fitter);
    if (valid.size() > cfg_.elite_count) valid.resize(cfg_.elite_count);
    return valid;
  }

  // Union without duplicate ids; later entries win.
  static Population unite(const Population& a, const Population& b) {
    Population out = a;
    for (const auto& ind : b) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Individual& x) { return x.id == ind.id; });
      if (it == out.end()) out.push_back(ind);
    }
    return out;
  }

  void truncate(Population& pop) const {
    std::stable_sort(pop.begin(), pop.end(), fitter);
    if (pop.size() > cfg_.population_size) pop.resize(cfg_.population_size);
  }

  // Records the best individual of the population if it beats the best so far.
  void update(std::string_view stage) {
    for (const auto& ind : population_) {
      if (!ind.valid()) continue;
      if (!std::isfinite(best_.fitness) || ind.fitness < best_.fitness) {
        best_ = ind;
        if (on_best_) on_best_(best_, iteration_, stage);
      }
    }
  }

  // --- the loop body -------------------------------------------------------

  IterationLog iterate(std::size_t iteration) {
    iteration_ = iteration;
    IterationLog log;
    log.iteration = iteration;

    if (std::none_of(population_.begin(), population_.end(), [](const Individual& i) { return i.valid(); }))
      throw AllIndividualsInvalid();

    SplitMix64 select_rng(derive_seed(cfg_.seed, iteration * 8 + 1));
    SplitMix64 crossover_rng(derive_seed(cfg_.seed, iteration * 8 + 2));
    SplitMix64 mutation_rng(derive_seed(cfg_.seed, iteration * 8 + 3));

    // Round 1: co-evolution reflection and crossover.
    auto pairs = select_pairs(population_, select_rng);
    std::vector<ReflectionRecord> co_records;
    for (const auto& pair : pairs) co_records.push_back(coevolution_reflect(pair));
    std::vector<std::ptrdiff_t> offspring_of;
    Population offspring = crossover(pairs, co_records, crossover_rng, &offspring_of);
    evaluate(offspring);
    population_ = unite(offspring, elites(population_));
    update("crossover");
    log.stages.push_back(snapshot("crossover", offspring.size()));

    // Round 2: self-evolution reflection and refinement.
    std::vector<ReflectionRecord> self_records;
    if (cfg_.self_evolution_enabled) {
      std::vector<std::pair<Individual, ReflectionRecord>> items;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (offspring_of[i] < 0) continue;
        const Individual& child = offspring[static_cast<std::size_t>(offspring_of[i])];
        ReflectionRecord rec = self_evolution_reflect(pairs[i].better, child);
        self_records.push_back(rec);
        items.emplace_back(child.rule ? child : pairs[i].better, rec);
      }
      Population refined = self_crossover(items);
      evaluate(refined);
      population_ = unite(refined, elites(population_));
      update("self-crossover");
      log.stages.push_back(snapshot("self-crossover", refined.size()));
    }

    // Round 3: collective reflection and elite mutation.
    std::vector<ReflectionRecord> history = co_records;
    history.insert(history.end(), self_records.begin(), self_records.end());
    ReflectionRecord collective;
    collective.kind = RequestKind::Collective;
    std::string guidance = collective_reflect(history, &collective);
    Population mutants = mutate(population_, guidance, mutation_rng);
    evaluate(mutants);
    population_ = unite(population_, mutants);
    truncate(population_);
    update("mutation");
    log.stages.push_back(snapshot("mutation", mutants.size()));

    for (auto* group : {&co_records, &self_records})
      for (auto& r : *group) log.reflections.push_back(std::move(r));
    if (!collective.prompt.empty()) log.reflections.push_back(std::move(collective));
    for (auto& r : log.reflections) r.iteration = iteration;
    log.best_fitness = best_.fitness;
    log.best_source = best_.rule ? best_.rule->canonical() : best_.source;
    return log;
  }

  // Replaces the oldest training case and re-scores the population on it.
  std::pair<std::uint64_t, std::uint64_t> rotate_case(TrainingCase fresh) {
    std::uint64_t removed = cases_.front().id;
    std::uint64_t added = fresh.id;
    cases_.pop_front();
    cases_.push_back(std::move(fresh));
    std::vector<TrainingCase> just_new{cases_.back()};
    Population probes;
    for (auto& ind : population_) {
      if (!ind.valid()) continue;
      Individual probe = ind;
      probe.evaluated = false;
      probes.push_back(std::move(probe));
    }
    evaluate_population(probes, just_new, cfg_.seed, cfg_.jobs);
    std::size_t p = 0;
    for (auto& ind : population_) {
      if (!ind.valid()) continue;
      const Individual& probe = probes[p++];
      if (!probe.valid()) {
        ind.fitness = kInvalidFitness;
        ind.diagnostic = probe.diagnostic;
        continue;
      }
      ind.makespans.erase(ind.makespans.begin());
      ind.makespans.push_back(probe.makespans.front());
      double sum = 0.0;
      for (Time t : ind.makespans) sum += static_cast<double>(t);
      ind.fitness = sum / static_cast<double>(ind.makespans.size());
    }
    return {removed, added};
  }

  std::string memory_text() const {
    if (memory_.empty()) return llm_.bundle().default_memory;
    std::string text;
    for (const auto& m : memory_) text += m + "\n";
    return trim(text);
  }

  TrainedArtifacts artifacts(const std::vector<std::string>& seeds) const {
    TrainedArtifacts a;
    a.best_source = best_.rule ? best_.rule->canonical() : best_.source;
    a.best_fitness = best_.fitness;
    for (const auto& ind : population_)
      if (ind.valid()) a.population.push_back(ind.rule->canonical());
    a.memory.assign(memory_.begin(), memory_.end());
    a.seeds = seeds;
    a.prompt_version = llm_.bundle().version;
    return a;
  }

 private:
  static std::string source_of(const Individual& ind) { return ind.rule ? ind.rule->canonical() : ind.source; }

  ReflectionRecord record(RequestKind kind, std::vector<std::uint64_t> subjects, const LlmClient::Reply& reply) {
    ReflectionRecord r;
    r.kind = kind;
    r.subjects = std::move(subjects);
    r.prompt = reply.prompt;
    r.response = reply.completion.ok() ? reply.completion.text : std::string();
    r.error = reply.completion.error;
    r.iteration = iteration_;
    return r;
  }

  StageSnapshot snapshot(std::string stage, std::size_t generations) const {
    return {std::move(stage), to_json(population_), best_.fitness, generations};
  }

  EvolutionConfig cfg_;
  LlmClient& llm_;
  std::deque<TrainingCase> cases_;
  Population population_;
  Individual best_;
  std::deque<std::string> memory_;
  std::uint64_t next_id_ = 0;
  std::size_t iteration_ = 0;
  BestCallback on_best_;
};

// ---------------------------------------------------------------------------
// Run directory

// Layout:
//   config.json              configuration snapshot
//   prompts/                 prompt bundle used by the run
//   logs/iteration_NNN.json  one document per iteration
//   populations/iteration_NNN.json  final population of each iteration
//   best_rule.txt            best rule so far (rule file format)
//   transcript.jsonl         every provider exchange, replayable
//   artifacts.json           inputs for the online phase
class RunRecorder {
 public:
  RunRecorder(std::filesystem::path dir, const Transcript* transcript) : dir_(std::move(dir)), transcript_(transcript) {
    std::filesystem::create_directories(dir_ / "logs");
    std::filesystem::create_directories(dir_ / "populations");
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path best_rule_path() const { return dir_ / "best_rule.txt"; }

  void write_config(const nlohmann::json& config, const PromptBundle& prompts) const {
    write(dir_ / "config.json", config.dump(2) + "\n");
    prompts.save(dir_ / "prompts");
  }

  void write_best(const Individual& best, std::size_t iteration, std::string_view stage) const {
    std::string text = "# fitness " + format_fitness(best.fitness) + ", iteration " + std::to_string(iteration) +
                       ", stage " + std::string(stage) + "\n" + (best.rule ? best.rule->canonical() : best.source) +
                       "\n";
    write(best_rule_path(), text);
  }

  void write_iteration(const IterationLog& log, const Population& pop) const {
    char name[64];
    std::snprintf(name, sizeof name, "iteration_%03zu.json", log.iteration);
    write(dir_ / "logs" / name, to_json(log).dump(2) + "\n");
    write(dir_ / "populations" / name, to_json(pop).dump(2) + "\n");
  }

  void write_artifacts(const TrainedArtifacts& a) const { write(dir_ / "artifacts.json", to_json(a).dump(2) + "\n"); }

  void write_failure(const std::string& what) const { write(dir_ / "FAILED", what + "\n"); }

  void flush_transcript() const {
    if (transcript_) transcript_->save(dir_ / "transcript.jsonl");
  }

 private:
  static void write(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  }

  std::filesystem::path dir_;
  const Transcript* transcript_;
};

inline std::vector<RuleProgram> default_seeds() { return {builtin("SPT"), builtin("SPT_TWKR")}; }

// Training phase: initialise, iterate max_function_evaluations times and
// replace the oldest training case after each iteration.
inline RunResult run_seevo(const EvolutionConfig& cfg, LlmClient& llm, CaseSource& case_source,
                           const std::vector<RuleProgram>& seeds = default_seeds(), RunRecorder* recorder = nullptr) {
  cfg.validate();
  std::vector<TrainingCase> cases;
  for (std::size_t i = 0; i < cfg.training_case_count; ++i) cases.push_back(case_source.next());
  Engine engine(cfg, llm, std::move(cases));
  std::vector<std::string> seed_sources;
  for (const auto& s : seeds) seed_sources.push_back(s.canonical());
  if (recorder) {
    engine.on_best([recorder](const Individual& best, std::size_t it, std::string_view stage) {
      recorder->write_best(best, it, stage);
    });
    recorder->write_config(to_json(cfg), llm.bundle());
  }

  RunResult result;
  try {
    Population pop = engine.init_population(seeds);
    engine.evaluate(pop);
    engine.set_population(std::move(pop));
    engine.update("init");
    for (std::size_t fe = 0; fe < cfg.max_function_evaluations; ++fe) {
      IterationLog log = engine.iterate(fe);
      log.case_rotation = engine.rotate_case(case_source.next());
      if (recorder) {
        recorder->write_iteration(log, engine.population());
        recorder->flush_transcript();
      }
      result.logs.push_back(std::move(log));
    }
  } catch (const std::exception& e) {
    if (recorder) {
      recorder->write_failure(e.what());
      recorder->write_artifacts(engine.artifacts(seed_sources));
      recorder->flush_transcript();
    }
    throw;
  }
  result.best = engine.best();
  result.population = engine.population();
  result.artifacts = engine.artifacts(seed_sources);
  if (recorder) {
    recorder->write_artifacts(result.artifacts);
    recorder->flush_transcript();
  }
  return result;
}

// Online phase: one iteration on new cases, starting from the trained
// population and guidance memory.
inline RunResult apply_online(const EvolutionConfig& cfg, LlmClient& llm, const TrainedArtifacts& trained,
                              const std::vector<Instance>& cases, RunRecorder* recorder = nullptr) {
  if (trained.empty()) throw ConfigError("trained artifacts contain no rules");
  if (cases.empty()) throw ConfigError("online phase needs at least one case");
  std::vector<TrainingCase> tc;
  for (std::size_t i = 0; i < cases.size(); ++i) tc.push_back({i, cases[i]});
  Engine engine(cfg, llm, std::move(tc));
  engine.set_memory(trained.memory);
  if (recorder) {
    engine.on_best([recorder](const Individual& best, std::size_t it, std::string_view stage) {
      recorder->write_best(best, it, stage);
    });
    recorder->write_config(to_json(cfg), llm.bundle());
  }

  std::vector<std::string> sources;
  auto add = [&](const std::string& s) {
    if (!s.empty() && std::find(sources.begin(), sources.end(), s) == sources.end()) sources.push_back(s);
  };
  add(trained.best_source);
  for (const auto& s : trained.population) add(s);
  for (const auto& s : trained.seeds) add(s);

  Population pop;
  for (const auto& s : sources) pop.push_back(engine.make_individual(s, Origin::Trained));
  engine.evaluate(pop);
  engine.set_population(std::move(pop));
  engine.update("trained");

  RunResult result;
  try {
    result.logs.push_back(engine.iterate(0));
    if (recorder) {
      recorder->write_iteration(result.logs.back(), engine.population());
      recorder->flush_transcript();
    }
  } catch (const std::exception& e) {
    if (recorder) {
      recorder->write_failure(e.what());
      recorder->flush_transcript();
    }
    throw;
  }
  result.best = engine.best();
  result.population = engine.population();
  result.artifacts = engine.artifacts(trained.seeds);
  if (recorder) recorder->write_artifacts(result.artifacts);
  return result;
}

}  // namespace seevo
