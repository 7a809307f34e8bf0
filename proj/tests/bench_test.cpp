#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "seevo/bench.hpp"
#include "test_util.hpp"

using namespace seevo;

namespace {

const std::filesystem::path kBenchDir = SEEVO_BENCHMARK_DIR;

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("seevo_bench_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(StaticGenerator, DeterministicAndWithinRanges) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    StaticGenParams p;
    p.seed = seed;
    Instance a = generate_static_case(p), b = generate_static_case(p);
    EXPECT_EQ(serialize_instance(a), serialize_instance(b));
    EXPECT_GE(a.job_count(), 20u);
    EXPECT_LE(a.job_count(), 100u);
    EXPECT_GE(a.machine_count(), 10u);
    EXPECT_LE(a.machine_count(), 20u);
    EXPECT_TRUE(a.is_static());
    for (std::size_t j = 0; j < a.job_count(); ++j) {
      std::set<std::size_t> machines;
      for (const auto& op : a.route(j)) {
        EXPECT_GE(op.processing_time, 50);
        EXPECT_LE(op.processing_time, 100);
        machines.insert(op.machine_id);
      }
      EXPECT_EQ(machines.size(), a.machine_count());
      EXPECT_EQ(a.route(j).size(), a.machine_count());
    }
  }
}

TEST(StaticGenerator, DifferentSeedsDiffer) {
  StaticGenParams a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(serialize_instance(generate_static_case(a)), serialize_instance(generate_static_case(b)));
}

TEST(StaticGenerator, InvalidRangesRejected) {
  StaticGenParams p;
  p.min_jobs = 10;
  p.max_jobs = 5;
  EXPECT_THROW(generate_static_case(p), ConfigError);
}

TEST(DynamicGenerator, BatchStructure) {
  std::size_t batch_total = 0, batch_count = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    DynamicGenParams p;
    p.seed = seed;
    auto c = generate_dynamic_case_detailed(p);
    ASSERT_TRUE(c.batches.size() == 2 || c.batches.size() == 3);
    EXPECT_EQ(c.instance.machine_count(), 10u);
    EXPECT_GE(c.instance.job_count(), 40u);
    EXPECT_LE(c.instance.job_count(), 150u);
    EXPECT_EQ(c.batches[0].arrival, 0);
    EXPECT_GE(c.batches[1].arrival, 1);
    EXPECT_LE(c.batches[1].arrival, 500);
    if (c.batches.size() == 3) {
      EXPECT_GE(c.batches[2].arrival, 501);
      EXPECT_LE(c.batches[2].arrival, 1000);
    }
    for (const auto& b : c.batches) {
      EXPECT_GE(b.size, 20u);
      EXPECT_LE(b.size, 50u);
      for (std::size_t j = b.first_job; j < b.first_job + b.size; ++j) EXPECT_EQ(c.instance.arrival(j), b.arrival);
      batch_total += b.size;
      ++batch_count;
    }
    for (std::size_t j = 0; j < c.instance.job_count(); ++j)
      for (const auto& op : c.instance.route(j)) {
        EXPECT_GE(op.processing_time, 50);
        EXPECT_LE(op.processing_time, 100);
      }
  }
  double mean = static_cast<double>(batch_total) / static_cast<double>(batch_count);
  EXPECT_GE(mean, 33.0);
  EXPECT_LE(mean, 37.0);
}

TEST(DynamicGenerator, Deterministic) {
  DynamicGenParams p;
  p.seed = 17;
  EXPECT_EQ(serialize_instance(generate_dynamic_case(p)), serialize_instance(generate_dynamic_case(p)));
  auto a = generate_dynamic_case(p);
  auto b = generate_dynamic_case(p);
  EXPECT_EQ(a.arrival_times(), b.arrival_times());
}

TEST(DynamicGenerator, OverlappingWindowsRejected) {
  DynamicGenParams p;
  p.window2_lo = 400;
  EXPECT_THROW(generate_dynamic_case(p), ConfigError);
}

TEST(Sidecar, RoundTrip) {
  DynamicGenParams p;
  p.seed = 5;
  auto c = generate_dynamic_case_detailed(p);
  auto doc = dynamic_sidecar(c);
  EXPECT_EQ(doc["params"]["first_batch_arrival"], 0);
  EXPECT_EQ(doc["seed"], 5);
  Instance back = load_dynamic_sidecar(doc);
  EXPECT_EQ(serialize_instance(back), serialize_instance(c.instance));
  EXPECT_EQ(back.arrival_times(), c.instance.arrival_times());

  auto dir = temp_dir("sidecar");
  std::ofstream(dir / "case5.json") << doc.dump();
  Instance from_file = load_instance_file(dir / "case5.json");
  EXPECT_EQ(from_file.name(), "case5");
  EXPECT_EQ(from_file.arrival_times(), c.instance.arrival_times());
  std::filesystem::remove_all(dir);
}

TEST(Sidecar, MalformedDocumentsRejected) {
  EXPECT_THROW(load_dynamic_sidecar(nlohmann::json::array()), InstanceFormatError);
  EXPECT_THROW(load_dynamic_sidecar({{"machine_count", 2}}), InstanceFormatError);
  nlohmann::json bad = {{"machine_count", 2}, {"batches", {{{"arrival", 0}, {"jobs", {{{5, 3}}}}}}}};
  try {
    load_dynamic_sidecar(bad);
    FAIL();
  } catch (const InstanceFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos) << e.what();
  }
}

TEST(BenchmarkSet, LoadsShippedFiles) {
  auto set = load_benchmark_set(kBenchDir);
  EXPECT_TRUE(set.errors.empty());
  ASSERT_EQ(set.instances.size(), 32u);
  EXPECT_TRUE(std::is_sorted(set.instances.begin(), set.instances.end(),
                             [](const Instance& a, const Instance& b) { return a.name() < b.name(); }));
  for (const auto& inst : set.instances) EXPECT_TRUE(known_upper_bound(inst.name()).has_value()) << inst.name();
}

TEST(BenchmarkSet, SizesMatchTables) {
  auto ta = load_benchmark_set(kBenchDir, "^TA01$");
  ASSERT_EQ(ta.instances.size(), 1u);
  EXPECT_EQ(ta.instances[0].job_count(), 15u);
  EXPECT_EQ(ta.instances[0].machine_count(), 15u);
  auto dmu = load_benchmark_set(kBenchDir, "^dmu08$");
  ASSERT_EQ(dmu.instances.size(), 1u);
  EXPECT_EQ(dmu.instances[0].job_count(), 20u);
  EXPECT_EQ(dmu.instances[0].machine_count(), 20u);
  auto ta71 = load_benchmark_set(kBenchDir, "^TA71$");
  ASSERT_EQ(ta71.instances.size(), 1u);
  EXPECT_EQ(ta71.instances[0].job_count(), 100u);
  EXPECT_EQ(ta71.instances[0].machine_count(), 20u);
  EXPECT_EQ(load_benchmark_set(kBenchDir, "^DMU").instances.size(), 16u);
}

TEST(BenchmarkSet, EmptyDirectoryWarns) {
  auto dir = temp_dir("empty");
  auto set = load_benchmark_set(dir);
  EXPECT_TRUE(set.instances.empty());
  EXPECT_TRUE(set.errors.empty());
  EXPECT_EQ(set.warnings.size(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(BenchmarkSet, ParseErrorsAggregated) {
  auto dir = temp_dir("errors");
  std::ofstream(dir / "good.txt") << "1 1\n0 5\n";
  std::ofstream(dir / "bad1.txt") << "1 1\n7 5\n";
  std::ofstream(dir / "bad2.txt") << "x\n";
  auto set = load_benchmark_set(dir);
  EXPECT_EQ(set.instances.size(), 1u);
  ASSERT_EQ(set.errors.size(), 2u);
  EXPECT_NE(set.errors[0].find("bad1.txt:2"), std::string::npos) << set.errors[0];
  std::filesystem::remove_all(dir);
}

TEST(BenchmarkSet, MissingDirectoryIsError) {
  auto set = load_benchmark_set("/nonexistent/seevo");
  EXPECT_EQ(set.errors.size(), 1u);
}

TEST(KnownUpperBound, Table) {
  EXPECT_EQ(known_upper_bound("DMU03"), 2731);
  EXPECT_EQ(known_upper_bound("TA01"), 1231);
  EXPECT_EQ(known_upper_bound("TA72"), 5181);
  EXPECT_FALSE(known_upper_bound("FT06").has_value());
}

namespace {

// A rule that yields a given makespan on a one-machine, one-job instance is
// awkward; instead build reports directly from makespans.
BenchReport report_of(std::vector<std::vector<std::optional<Time>>> spans) {
  BenchReport r;
  for (std::size_t c = 0; c < spans.size(); ++c) r.cases.push_back("c" + std::to_string(c));
  for (std::size_t m = 0; m < spans[0].size(); ++m) r.methods.push_back("m" + std::to_string(m));
  r.makespans = std::move(spans);
  r.finalize();
  return r;
}

}  // namespace

TEST(BenchReport, GapDefinition) {
  auto r = report_of({{6, 9}});
  EXPECT_EQ(r.best[0], 6);
  EXPECT_DOUBLE_EQ(*r.gaps[0][0], 0.0);
  EXPECT_DOUBLE_EQ(*r.gaps[0][1], 0.5);
}

TEST(BenchReport, SingleMethodAllZero) {
  auto r = report_of({{6}, {11}});
  EXPECT_DOUBLE_EQ(*r.gaps[0][0], 0.0);
  EXPECT_DOUBLE_EQ(*r.gaps[1][0], 0.0);
  EXPECT_DOUBLE_EQ(*r.mean_makespan[0], 8.5);
}

TEST(BenchReport, MissingCellsExcluded) {
  auto r = report_of({{std::nullopt, 10}, {4, 8}});
  EXPECT_EQ(r.best[0], 10);
  EXPECT_FALSE(r.gaps[0][0].has_value());
  EXPECT_DOUBLE_EQ(*r.mean_makespan[0], 4.0);
  EXPECT_DOUBLE_EQ(*r.mean_gap[1], 0.5);
}

TEST(BenchReport, CsvAndPlotData) {
  auto r = report_of({{6, 9}, {10, 10}});
  EXPECT_EQ(r.to_csv(), "case,m0,m1,best\nc0,6,9,6\nc1,10,10,10\nMean,8.00,9.50,\n");
  EXPECT_EQ(r.gaps_csv('\t').substr(0, 9), "case\tm0\tm");
  auto plot = r.plot_data();
  EXPECT_EQ(plot["gaps"]["m1"][0], 0.5);
  EXPECT_EQ(plot["cases"].size(), 2u);
}

TEST(RunBaselines, GapsMatchIndependentRecomputation) {
  std::vector<Instance> cases;
  for (std::uint64_t s = 0; s < 20; ++s) {
    DynamicGenParams p;
    p.seed = s;
    p.min_batch_size = p.max_batch_size = 20;
    cases.push_back(generate_dynamic_case(p));
  }
  auto methods = builtin_methods(dynamic_baseline_names());
  auto r = run_baselines(cases, methods, 3, 2);
  ASSERT_TRUE(r.failures.empty());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::vector<Time> spans;
    for (const auto& m : methods) spans.push_back(simulate(cases[c], m.rule, derive_seed(3, c)).makespan);
    Time best = *std::min_element(spans.begin(), spans.end());
    bool zero = false;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      EXPECT_EQ(*r.makespans[c][m], spans[m]);
      double gap = static_cast<double>(spans[m] - best) / static_cast<double>(best);
      EXPECT_EQ(*r.gaps[c][m], gap);
      EXPECT_GE(*r.gaps[c][m], 0.0);
      zero = zero || *r.gaps[c][m] == 0.0;
    }
    EXPECT_TRUE(zero);
  }
}

TEST(RunBaselines, FailingCellsRecorded) {
  std::vector<Method> methods = {{"ok", builtin("SPT")}, {"boom", parse_rule("exp(exp(exp(PT)))")}};
  auto r = run_baselines({seevo::testing::two_by_two()}, methods);
  EXPECT_EQ(r.makespans[0][0], 6);
  EXPECT_FALSE(r.makespans[0][1].has_value());
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("boom"), std::string::npos);
}

TEST(RunBaselines, EmptyInputsRejected) {
  EXPECT_THROW(run_baselines({}, builtin_methods({"SPT"})), ConfigError);
  EXPECT_THROW(run_baselines({seevo::testing::two_by_two()}, {}), ConfigError);
}

TEST(RunBaselines, Dmu03SptAboveUpperBound) {
  auto set = load_benchmark_set(kBenchDir, "^DMU03$");
  ASSERT_EQ(set.instances.size(), 1u);
  auto r = run_baselines(set.instances, builtin_methods({"SPT"}));
  EXPECT_GE(*r.makespans[0][0], 2731);
}
