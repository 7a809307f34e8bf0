// seevo: command-line front end for the dispatching-rule toolkit.
//
// Exit codes: 0 success, 1 run failure, 2 input or configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "seevo/bench.hpp"
#include "seevo/cli.hpp"
#include "seevo/core.hpp"
#include "seevo/evolve.hpp"
#include "seevo/llm.hpp"
#include "seevo/rulelang.hpp"
#include "seevo/simulator.hpp"

namespace fs = std::filesystem;
using namespace seevo;
using namespace seevo::cli;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Loads instance files; directories contribute every file they contain.
std::vector<Instance> load_instances(const std::vector<std::string>& paths, const std::string& filter,
                                     std::vector<std::string>& errors) {
  std::vector<Instance> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      auto set = load_benchmark_set(p, filter);
      for (auto& e : set.errors) errors.push_back(e);
      for (auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
      for (auto& inst : set.instances) out.push_back(std::move(inst));
      continue;
    }
    try {
      out.push_back(load_instance_file(p));
    } catch (const InstanceFormatError& e) {
      errors.push_back(p + ":" + std::to_string(e.line()) + ": " + e.what());
    } catch (const std::exception& e) {
      errors.push_back(p + ": " + e.what());
    }
  }
  return out;
}

int report_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e << "\n";
  return errors.empty() ? kOk : kInputError;
}

// Parses a rule spec, printing the position on failure.
std::optional<RuleProgram> load_rule(const std::string& spec) {
  try {
    return resolve_rule(spec);
  } catch (const ParseError& e) {
    std::cerr << "error: " << rule_label(spec) << ": parse error at position " << e.position() << ": " << e.message()
              << "\n";
    return std::nullopt;
  }
}

std::vector<Instance> generated_cases(const std::string& kind, std::size_t count, std::uint64_t seed) {
  GeneratedCaseSource source(kind == "dynamic" ? GeneratedCaseSource::Kind::Dynamic : GeneratedCaseSource::Kind::Static,
                             seed);
  std::vector<Instance> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(source.next().instance);
  return out;
}

// ---------------------------------------------------------------------------
// Provider setup shared by evolve and apply

struct ProviderBundle {
  std::unique_ptr<Provider> provider;
  Transcript transcript;
  PromptBundle prompts;
};

ProviderBundle make_provider(const RunConfig& rc) {
  ProviderBundle b;
  b.prompts = rc.get("prompts").empty() ? PromptBundle{} : PromptBundle::load(rc.get("prompts"));
  const std::string& kind = rc.get("provider");
  if (kind == "offline") {
    b.provider = std::make_unique<OfflineMutatorProvider>(derive_seed(rc.get_uint("seed"), 0x6f66666c696e65));
  } else if (kind == "replay") {
    try {
      b.provider = std::make_unique<ReplayProvider>(Transcript::load(rc.get("transcript")));
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  } else {
    LiveProviderConfig lc;
    lc.base_url = rc.get("base_url");
    lc.model = rc.get("model");
    lc.api_key = rc.get("api_key");
    lc.timeout = std::chrono::seconds(rc.get_uint("timeout_s"));
    if (lc.api_key.empty()) std::cerr << "warning: no API key set (LLM_API_KEY)\n";
    b.provider = std::make_unique<LiveProvider>(lc);
  }
  return b;
}

// Options shared by evolve and apply. Only flags given on the command line
// override lower layers.
struct RunFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  bool no_self_evolution = false;
  std::string ablation;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help));
  }

  void register_on(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    add(app, "--seed", "seed", "root random seed");
    add(app, "--provider", "provider", "offline | replay | live");
    add(app, "--transcript", "transcript", "transcript to replay (replay provider)");
    add(app, "--run-dir", "run_dir", "output directory");
    add(app, "--prompts", "prompts", "prompt directory overriding the built-in templates");
    add(app, "--max-fe", "max_fe", "iterations of the evolutionary loop");
    add(app, "--population", "population_size", "population size");
    add(app, "--cases", "cases", "number of training cases");
    add(app, "--case-kind", "case_kind", "static | dynamic training cases");
    add(app, "--mutation-probability", "mutation_probability", "elite mutation probability");
    add(app, "--crossover-probability", "crossover_probability", "crossover probability");
    add(app, "--temperature", "temperature", "sampling temperature");
    add(app, "--jobs", "jobs", "evaluation threads");
    add(app, "--retries", "retry_attempts", "provider attempts per request");
    add(app, "--model", "model", "model name (live provider)");
    add(app, "--base-url", "base_url", "chat endpoint base URL (live provider)");
    app->add_option("--ablation", ablation, "no-self-evolution disables the self-evolution stage")
        ->check(CLI::IsMember({"no-self-evolution", "none"}));
  }

  RunConfig resolve() const {
    RunConfig rc;
    if (!config_file.empty()) rc.apply(load_config_file(config_file), "config file");
    rc.apply(environment_layer(), "environment");
    Layer flags;
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) flags[key] = values.at(key);
    if (ablation == "no-self-evolution") flags["self_evolution"] = "false";
    rc.apply(flags, "flag");
    return rc;
  }
};

void print_trace(const RunResult& result) {
  std::cout << "iteration,best_fitness,generations\n";
  for (const auto& log : result.logs)
    std::cout << log.iteration << "," << format_fitness(log.best_fitness) << "," << log.generations() << "\n";
  std::cout << "best: " << format_fitness(result.best.fitness) << "  "
            << (result.best.rule ? result.best.rule->canonical() : result.best.source) << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_generate(const std::string& kind, std::size_t count, std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t case_seed = derive_seed(seed, i);
    char name[64];
    if (kind == "static") {
      StaticGenParams p;
      p.seed = case_seed;
      std::snprintf(name, sizeof name, "static_%04zu.txt", i);
      write_text(fs::path(out_dir) / name, serialize_instance(generate_static_case(p)));
    } else {
      DynamicGenParams p;
      p.seed = case_seed;
      std::snprintf(name, sizeof name, "dynamic_%04zu.json", i);
      write_text(fs::path(out_dir) / name, dynamic_sidecar(generate_dynamic_case_detailed(p)).dump(1) + "\n");
    }
  }
  std::cout << "wrote " << count << " " << kind << " instances to " << out_dir << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& rule_spec, const std::vector<std::string>& paths, const std::string& filter,
                 std::uint64_t seed, bool gantt, const std::string& gantt_out) {
  auto rule = load_rule(rule_spec);
  std::vector<std::string> errors;
  auto instances = load_instances(paths, filter, errors);
  if (!rule || !errors.empty()) {
    report_errors(errors);
    return kInputError;
  }
  if (instances.empty()) {
    std::cerr << "error: no instances\n";
    return kInputError;
  }
  std::string gantt_text;
  double sum = 0;
  std::cout << "instance,makespan,upper_bound\n";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    Schedule s;
    try {
      s = simulate(instances[i], *rule, derive_seed(seed, i));
    } catch (const RuleEvalError& e) {
      std::cerr << "error: " << instances[i].name() << ": " << e.what() << "\n";
      return kRunFailure;
    }
    auto ub = known_upper_bound(instances[i].name());
    std::cout << instances[i].name() << "," << s.makespan << "," << (ub ? std::to_string(*ub) : "") << "\n";
    sum += static_cast<double>(s.makespan);
    if (gantt) {
      std::string rows = gantt_csv(instances[i], s);
      gantt_text += gantt_text.empty() ? rows : rows.substr(rows.find('\n') + 1);
    }
  }
  std::cout << "mean," << fmt(sum / static_cast<double>(instances.size())) << ",\n";
  if (gantt) {
    if (gantt_out.empty()) std::cout << "\n" << gantt_text;
    else write_text(gantt_out, gantt_text);
  }
  return kOk;
}

int cmd_validate(const std::vector<std::string>& rules, const std::vector<std::string>& paths,
                 const std::string& transcript, const std::string& prompts, const std::string& config,
                 std::uint64_t seed) {
  bool input_error = false, violations = false;
  std::vector<RuleProgram> programs;
  for (const auto& r : rules) {
    if (auto p = load_rule(r)) {
      std::cout << "rule " << rule_label(r) << ": ok (" << p->canonical() << ")\n";
      programs.push_back(*p);
    } else {
      input_error = true;
    }
  }
  std::vector<std::string> errors;
  auto instances = load_instances(paths, "", errors);
  for (const auto& inst : instances)
    std::cout << "instance " << inst.name() << ": ok (" << inst.job_count() << "x" << inst.machine_count() << ")\n";
  if (!errors.empty()) {
    report_errors(errors);
    input_error = true;
  }
  if (!transcript.empty()) {
    try {
      auto t = Transcript::load(transcript);
      std::cout << "transcript " << transcript << ": ok (" << t.size() << " records)\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      input_error = true;
    }
  }
  if (!prompts.empty()) {
    try {
      auto b = PromptBundle::load(prompts);
      for (const auto& [kind, text] : b.templates)
        if (text.find("{{task}}") == std::string::npos)
          throw PromptError("template " + std::string(to_string(kind)) + " does not include {{task}}");
      std::cout << "prompts " << prompts << ": ok (version " << b.version << ")\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      input_error = true;
    }
  }
  if (!config.empty()) {
    try {
      RunConfig rc;
      rc.apply(load_config_file(config), "config file");
      rc.evolution();
      std::cout << "config " << config << ": ok\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      input_error = true;
    }
  }
  if (input_error) return kInputError;
  // Simulate every rule on every instance and check the schedule.
  for (const auto& p : programs)
    for (std::size_t i = 0; i < instances.size(); ++i) {
      try {
        auto report = validate_schedule(instances[i], simulate(instances[i], p, derive_seed(seed, i)));
        for (const auto& v : report.violations) {
          std::cout << "violation " << instances[i].name() << " / " << p.canonical() << ": " << to_string(v.kind)
                    << ": " << v.message << "\n";
          violations = true;
        }
      } catch (const RuleEvalError& e) {
        std::cout << "violation " << instances[i].name() << " / " << p.canonical() << ": " << e.what() << "\n";
        violations = true;
      }
    }
  return violations ? kRunFailure : kOk;
}

int cmd_evolve(const RunFlags& flags) {
  RunConfig rc = flags.resolve();
  EvolutionConfig cfg = rc.evolution();
  auto pb = make_provider(rc);
  LlmClient client(*pb.provider, pb.prompts, cfg.retry, &pb.transcript, cfg.model, cfg.temperature);
  GeneratedCaseSource source(
      rc.get("case_kind") == "dynamic" ? GeneratedCaseSource::Kind::Dynamic : GeneratedCaseSource::Kind::Static,
      cfg.seed);
  std::string dir = rc.get("run_dir").empty() ? "runs/seevo-" + std::to_string(cfg.seed) : rc.get("run_dir");
  RunRecorder recorder(dir, &pb.transcript);
  write_text(fs::path(dir) / "run_config.json", rc.snapshot().dump(2) + "\n");
  try {
    auto result = run_seevo(cfg, client, source, default_seeds(), &recorder);
    print_trace(result);
    std::cout << "run directory: " << dir << "\n";
    return kOk;
  } catch (const EvolutionError& e) {
    std::cerr << "error: " << e.what() << " (partial results in " << dir << ")\n";
    return kRunFailure;
  } catch (const TranscriptExhausted& e) {
    std::cerr << "error: " << e.what() << " (partial results in " << dir << ")\n";
    return kRunFailure;
  } catch (const ReplayMismatch& e) {
    std::cerr << "error: " << e.what() << " (partial results in " << dir << ")\n";
    return kRunFailure;
  }
}

TrainedArtifacts load_artifacts(const std::string& path) {
  fs::path p = path;
  if (fs::is_directory(p)) p /= "artifacts.json";
  try {
    return trained_artifacts_from_json(nlohmann::json::parse(read_text(p)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

int cmd_apply(const RunFlags& flags, const std::string& artifacts, const std::vector<std::string>& paths,
              std::size_t generated, const std::string& generated_kind) {
  RunConfig rc = flags.resolve();
  EvolutionConfig cfg = rc.evolution();
  TrainedArtifacts trained = load_artifacts(artifacts);
  std::vector<std::string> errors;
  auto instances = load_instances(paths, "", errors);
  if (!errors.empty()) return report_errors(errors);
  if (generated > 0)
    for (auto& inst : generated_cases(generated_kind, generated, derive_seed(cfg.seed, 0x74657374)))
      instances.push_back(std::move(inst));
  if (instances.empty()) throw ConfigError("apply needs instances (--instances or --generate)");
  auto pb = make_provider(rc);
  LlmClient client(*pb.provider, pb.prompts, cfg.retry, &pb.transcript, cfg.model, cfg.temperature);
  std::unique_ptr<RunRecorder> recorder;
  if (!rc.get("run_dir").empty()) {
    recorder = std::make_unique<RunRecorder>(rc.get("run_dir"), &pb.transcript);
    write_text(fs::path(rc.get("run_dir")) / "run_config.json", rc.snapshot().dump(2) + "\n");
  }
  try {
    auto result = apply_online(cfg, client, trained, instances, recorder.get());
    print_trace(result);
    return kOk;
  } catch (const EvolutionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  } catch (const TranscriptExhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
}

int cmd_bench(const std::vector<std::string>& paths, const std::string& filter, bool dynamic, std::size_t cases,
              std::uint64_t seed, const std::string& rules, const std::string& out_dir, std::size_t jobs) {
  std::vector<Method> methods;
  try {
    methods = resolve_methods(rules);
  } catch (const ParseError& e) {
    std::cerr << "error: rule parse error at position " << e.position() << ": " << e.message() << "\n";
    return kInputError;
  }
  std::vector<std::string> errors;
  auto instances = load_instances(paths, filter, errors);
  if (!errors.empty()) return report_errors(errors);
  if (dynamic) {
    DynamicGenParams p;
    for (std::size_t i = 0; i < cases; ++i) {
      p.seed = derive_seed(seed, i);
      instances.push_back(generate_dynamic_case(p));
    }
  }
  if (instances.empty()) {
    std::cerr << "error: no instances (use --dmu/--ta/--instances or --dynamic)\n";
    return kInputError;
  }
  auto report = run_baselines(instances, methods, seed, jobs);
  std::cout << report.to_csv();
  std::size_t ub_violations = 0;
  for (std::size_t c = 0; c < report.cases.size(); ++c) {
    auto ub = known_upper_bound(report.cases[c]);
    if (!ub) continue;
    for (std::size_t m = 0; m < report.methods.size(); ++m)
      if (report.makespans[c][m] && *report.makespans[c][m] < *ub) {
        std::cerr << "warning: " << report.cases[c] << " / " << report.methods[m] << " beats the known bound " << *ub
                  << "\n";
        ++ub_violations;
      }
  }
  if (!out_dir.empty()) {
    write_text(fs::path(out_dir) / "makespans.csv", report.to_csv());
    write_text(fs::path(out_dir) / "gaps.csv", report.gaps_csv());
    write_text(fs::path(out_dir) / "plot.json", report.plot_data().dump(1) + "\n");
    std::cerr << "report written to " << out_dir << "\n";
  }
  for (const auto& f : report.failures) std::cerr << "failed cell: " << f << "\n";
  return report.failures.empty() && ub_violations == 0 ? kOk : kRunFailure;
}

int cmd_report(const std::string& dir) {
  fs::path logs = fs::path(dir) / "logs";
  if (!fs::is_directory(logs)) {
    std::cerr << "error: " << dir << " is not a run directory\n";
    return kInputError;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(logs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::cout << "iteration,best_fitness,generations,stages\n";
  for (const auto& f : files) {
    auto j = nlohmann::json::parse(read_text(f));
    std::size_t gens = 0;
    std::string stages;
    for (const auto& s : j["stages"]) {
      gens += s["generations"].get<std::size_t>();
      stages += (stages.empty() ? "" : "+") + s["stage"].get<std::string>();
    }
    std::cout << j["iteration"] << "," << (j["best_fitness"].is_number() ? fmt(j["best_fitness"]) : "invalid") << ","
              << gens << "," << stages << "\n";
  }
  fs::path best = fs::path(dir) / "best_rule.txt";
  if (fs::exists(best)) std::cout << "\n" << read_text(best);
  if (fs::exists(fs::path(dir) / "FAILED")) std::cout << "run failed: " << read_text(fs::path(dir) / "FAILED");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolve and evaluate priority dispatching rules for job shop scheduling"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write random static or dynamic instances");
  std::string gen_kind = "static", gen_out;
  std::size_t gen_count = 1;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", gen_kind, "static | dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  gen->add_option("--count", gen_count, "number of instances");
  gen->add_option("--seed", gen_seed, "root seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "simulate one rule on instances");
  std::string eval_rule, eval_filter, gantt_out;
  std::vector<std::string> eval_paths;
  std::uint64_t eval_seed = 0;
  bool gantt = false;
  eval->add_option("--rule", eval_rule, "builtin name, rule file or expression")->required();
  eval->add_option("instances", eval_paths, "instance files or directories")->required();
  eval->add_option("--filter", eval_filter, "regex on instance names inside directories");
  eval->add_option("--seed", eval_seed, "simulation seed");
  eval->add_flag("--gantt", gantt, "emit schedule rows");
  eval->add_option("--gantt-out", gantt_out, "write schedule rows to a file (implies --gantt)");

  // validate
  auto* val = app.add_subcommand("validate", "check rules, instances, transcripts, prompts and configs");
  std::vector<std::string> val_rules, val_paths;
  std::string val_transcript, val_prompts, val_config;
  std::uint64_t val_seed = 0;
  val->add_option("--rule", val_rules, "rule to check (repeatable)");
  val->add_option("--instances", val_paths, "instance files or directories");
  val->add_option("--transcript", val_transcript, "transcript file");
  val->add_option("--prompts", val_prompts, "prompt directory");
  val->add_option("--config", val_config, "config file");
  val->add_option("--seed", val_seed, "simulation seed");

  // evolve
  auto* evo = app.add_subcommand("evolve", "run the self-evolution training phase");
  RunFlags evo_flags;
  evo_flags.register_on(evo);

  // apply
  auto* apply = app.add_subcommand("apply", "run the online phase from trained artifacts");
  RunFlags apply_flags;
  apply_flags.register_on(apply);
  std::string artifacts, apply_kind = "dynamic";
  std::vector<std::string> apply_paths;
  std::size_t apply_generate = 0;
  apply->add_option("--artifacts", artifacts, "run directory or artifacts.json")->required();
  apply->add_option("--instances", apply_paths, "test instance files or directories");
  apply->add_option("--generate", apply_generate, "also generate this many test cases");
  apply->add_option("--generate-kind", apply_kind, "static | dynamic")->check(CLI::IsMember({"static", "dynamic"}));

  // bench
  auto* bench = app.add_subcommand("bench", "run rules over benchmark or generated instances");
  std::vector<std::string> bench_paths;
  std::string bench_filter, bench_rules = "all", bench_out, dmu_dir, ta_dir;
  bool bench_dynamic = false;
  std::size_t bench_cases = 100, bench_jobs = 1;
  std::uint64_t bench_seed = 0;
  bench->add_option("--dmu", dmu_dir, "benchmark directory; selects DMU instances");
  bench->add_option("--ta", ta_dir, "benchmark directory; selects TA instances");
  bench->add_option("--instances", bench_paths, "instance files or directories");
  bench->add_option("--filter", bench_filter, "regex on instance names inside directories");
  bench->add_flag("--dynamic", bench_dynamic, "add generated dynamic cases");
  bench->add_option("--cases", bench_cases, "number of dynamic cases");
  bench->add_option("--seed", bench_seed, "root seed");
  bench->add_option("--rules", bench_rules, "all, dynamic-baselines, or comma-separated names/files/expressions");
  bench->add_option("--out", bench_out, "directory for makespans.csv, gaps.csv and plot.json");
  bench->add_option("--jobs", bench_jobs, "worker threads");

  // report
  auto* rep = app.add_subcommand("report", "summarize a run directory");
  std::string rep_dir;
  rep->add_option("run_dir", rep_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*gen) return cmd_generate(gen_kind, gen_count, gen_seed, gen_out);
    if (*eval)
      return cmd_evaluate(eval_rule, eval_paths, eval_filter, eval_seed, gantt || !gantt_out.empty(), gantt_out);
    if (*val) return cmd_validate(val_rules, val_paths, val_transcript, val_prompts, val_config, val_seed);
    if (*evo) return cmd_evolve(evo_flags);
    if (*apply) return cmd_apply(apply_flags, artifacts, apply_paths, apply_generate, apply_kind);
    if (*bench) {
      std::string filter = bench_filter;
      if (!dmu_dir.empty()) {
        bench_paths.push_back(dmu_dir);
        if (filter.empty()) filter = "^DMU";
      }
      if (!ta_dir.empty()) {
        bench_paths.push_back(ta_dir);
        if (filter.empty()) filter = "^TA";
      }
      if (!dmu_dir.empty() && !ta_dir.empty() && bench_filter.empty()) filter = "^(DMU|TA)";
      std::sort(bench_paths.begin(), bench_paths.end());
      bench_paths.erase(std::unique(bench_paths.begin(), bench_paths.end()), bench_paths.end());
      return cmd_bench(bench_paths, filter, bench_dynamic, bench_cases, bench_seed, bench_rules, bench_out,
                       bench_jobs);
    }
    if (*rep) return cmd_report(rep_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const PromptError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
