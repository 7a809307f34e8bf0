#include <gtest/gtest.h>

#include <random>

#include "seevo/simulator.hpp"
#include "test_util.hpp"

namespace seevo {
namespace {

using testing::make_instance;
using testing::two_by_two;

Instance random_instance(std::mt19937_64& gen, std::size_t max_jobs, std::size_t max_machines, bool dynamic,
                         Time max_p = 20) {
  std::size_t n = 1 + gen() % max_jobs, m = 1 + gen() % max_machines;
  std::vector<testing::Route> routes(n);
  std::vector<Time> arrivals(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t len = 1 + gen() % m;
    for (std::size_t k = 0; k < len; ++k) routes[j].push_back({gen() % m, static_cast<Time>(gen() % max_p)});
    if (dynamic) arrivals[j] = static_cast<Time>(gen() % 30);
  }
  return make_instance(m, routes, arrivals);
}

// Every op must start as soon as its machine and its job allow: the machine is
// busy over the whole interval between the op becoming ready and its start.
bool is_non_delay(const Instance& inst, const Schedule& s) {
  std::vector<std::vector<std::pair<Time, Time>>> busy(inst.machine_count());
  std::map<std::pair<std::size_t, std::size_t>, ScheduledOp> by_op;
  for (const auto& e : s.entries) {
    busy[e.machine_id].push_back({e.start, e.end});
    by_op[{e.job_id, e.op_index}] = e;
  }
  for (auto& b : busy) std::sort(b.begin(), b.end());
  for (const auto& e : s.entries) {
    Time ready = e.op_index == 0 ? inst.arrival(e.job_id) : by_op[{e.job_id, e.op_index - 1}].end;
    Time covered = ready;
    for (auto [a, b] : busy[e.machine_id]) {
      if (a > covered) break;
      covered = std::max(covered, b);
    }
    if (covered < e.start) return false;
  }
  return true;
}

TEST(Simulate, SingleOp) {
  Instance inst = make_instance(1, {{{0, 5}}});
  for (const auto& name : builtin_names()) EXPECT_EQ(simulate(inst, builtin(name), 1).makespan, 5) << name;
}

TEST(Simulate, TwoByTwoSpt) {
  Schedule s = simulate(two_by_two(), builtin("SPT"), 0);
  EXPECT_EQ(s.makespan, 6);
  std::vector<ScheduledOp> expected = {{0, 0, 0, 0, 3}, {1, 0, 1, 0, 4}, {1, 1, 0, 4, 5}, {0, 1, 1, 4, 6}};
  EXPECT_EQ(s.entries, expected);
  EXPECT_EQ(testing::enumerate_machine_orders(two_by_two()), 6);
}

TEST(Simulate, ArrivalGatesFirstOperation) {
  Instance inst = two_by_two({0, 10});
  Schedule s = simulate(inst, builtin("SPT"), 0);
  for (const auto& e : s.entries)
    if (e.job_id == 1 && e.op_index == 0) EXPECT_GE(e.start, 10);
  EXPECT_TRUE(validate_schedule(inst, s).ok());
}

TEST(Simulate, ZeroDurationOperations) {
  Instance inst = make_instance(2, {{{1, 0}, {0, 0}, {1, 3}}, {{0, 2}}});
  Schedule s = simulate(inst, builtin("SPT"), 0);
  EXPECT_TRUE(validate_schedule(inst, s).ok());
  EXPECT_EQ(s.makespan, 5);  // J1 holds M0 over [0,2), so J0 resumes at 2
}

TEST(Simulate, SptVersusLptOnOneMachine) {
  Instance inst = make_instance(1, {{{0, 3}}, {{0, 5}}});
  EXPECT_EQ(simulate(inst, builtin("SPT"), 0).entries.front().job_id, 0u);
  EXPECT_EQ(simulate(inst, builtin("LPT"), 0).entries.front().job_id, 1u);
}

TEST(Simulate, TiesGoToLowestJob) {
  Instance inst = make_instance(1, {{{0, 4}}, {{0, 4}}, {{0, 4}}});
  std::vector<std::size_t> order;
  for (const auto& e : simulate(inst, parse_rule("1"), 0).entries) order.push_back(e.job_id);
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Simulate, RuleEvalErrorReportsFeatures) {
  try {
    simulate(two_by_two(), parse_rule("exp(PT * 1000)"), 0);
    FAIL();
  } catch (const RuleEvalError& e) {
    EXPECT_NE(std::string(e.what()).find("PT=3"), std::string::npos) << e.what();
  }
}

TEST(ComputeFeatures, SingleRemainingOp) {
  Instance inst = make_instance(1, {{{0, 7}}});
  SimState state(inst);
  FeatureVector fv = compute_features(state, inst, inst.op(0, 0), 0.5);
  EXPECT_EQ(fv[Feature::PT], 7);
  EXPECT_EQ(fv[Feature::SSO], 0);
  EXPECT_EQ(fv[Feature::LSO], 0);
  EXPECT_EQ(fv[Feature::SRM], 0);
  EXPECT_EQ(fv[Feature::NOPS_REMAINING], 1);
  EXPECT_EQ(fv[Feature::TWKR], 7);
  EXPECT_EQ(fv[Feature::RAND], 0.5);
}

TEST(ComputeFeatures, RouteArithmetic) {
  Instance inst = make_instance(3, {{{0, 5}, {1, 3}, {2, 9}}});
  SimState state(inst);
  FeatureVector fv = compute_features(state, inst, inst.op(0, 0), 0.0);
  EXPECT_EQ(fv[Feature::PT], 5);
  EXPECT_EQ(fv[Feature::TWK], 17);
  EXPECT_EQ(fv[Feature::TWKR], 17);
  EXPECT_EQ(fv[Feature::SRM], 12);
  EXPECT_EQ(fv[Feature::SSO], 3);
  EXPECT_EQ(fv[Feature::LSO], 9);
  EXPECT_EQ(fv[Feature::NOPS_REMAINING], 3);
}

TEST(ComputeFeatures, WaitAndClock) {
  Instance inst = make_instance(1, {{{0, 5}, {0, 1}}}, {3});
  SimState state(inst);
  state.now = 12;
  state.job_ready_at[0] = 10;
  FeatureVector fv = compute_features(state, inst, inst.op(0, 1), 0.0);
  EXPECT_EQ(fv[Feature::WAIT], 2);
  EXPECT_EQ(fv[Feature::NOW], 12);
  EXPECT_EQ(fv[Feature::ARRIVAL], 3);
  state.now = 9;
  EXPECT_EQ(compute_features(state, inst, inst.op(0, 1), 0.0)[Feature::WAIT], 0);
}

TEST(ComputeFeatures, RandDrawsOncePerCandidate) {
  Instance inst = make_instance(1, {{{0, 1}}, {{0, 1}}, {{0, 1}}});
  std::vector<double> seen;
  simulate(inst, builtin("RANDOM"), 5, [&](const Decision& d) {
    for (double s : d.scores) seen.push_back(s);
  });
  // decisions see 3, 2, then 1 candidate
  SplitMix64 rng(5);
  std::vector<double> expected;
  for (int i = 0; i < 6; ++i) expected.push_back(rng.uniform());
  EXPECT_EQ(seen, expected);
}

TEST(ComputeFeatures, InvariantsHoldAtEveryDecision) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    Instance inst = random_instance(gen, 6, 4, true);
    SimState state(inst);
    for (std::size_t j = 0; j < inst.job_count(); ++j) {
      for (std::size_t k = 0; k < inst.route(j).size(); ++k) {
        FeatureVector fv = compute_features(state, inst, inst.op(j, k), 0.0);
        EXPECT_EQ(fv[Feature::TWKR], fv[Feature::PT] + fv[Feature::SRM]);
        if (fv[Feature::NOPS_REMAINING] >= 2) {
          EXPECT_LE(0, fv[Feature::SSO]);
          EXPECT_LE(fv[Feature::SSO], fv[Feature::LSO]);
          EXPECT_LE(fv[Feature::LSO], fv[Feature::SRM]);
        } else {
          EXPECT_EQ(fv[Feature::SSO], 0);
          EXPECT_EQ(fv[Feature::LSO], 0);
          EXPECT_EQ(fv[Feature::SRM], 0);
        }
      }
    }
  }
}

TEST(BruteForce, Examples) {
  EXPECT_EQ(brute_force_optimal(make_instance(1, {{{0, 5}}})), 5);
  EXPECT_EQ(brute_force_optimal(two_by_two()), 6);
  EXPECT_EQ(brute_force_optimal(make_instance(1, {{{0, 3}}, {{0, 5}}})), 8);
  EXPECT_THROW(brute_force_optimal(make_instance(1, {{{0, 1}}, {{0, 1}}}), 1), OpBudgetExceeded);
}

TEST(BruteForce, AgreesWithMachineOrderEnumeration) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    Instance inst = random_instance(gen, 3, 3, trial % 2 == 1);
    EXPECT_EQ(brute_force_optimal(inst), testing::enumerate_machine_orders(inst)) << serialize_instance(inst);
  }
}

TEST(Property, FeasibleNonDelayDeterministic) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 1000; ++trial) {
    Instance inst = random_instance(gen, 8, 5, trial % 2 == 0);
    const auto& name = kBuiltinRules[trial % kBuiltinRules.size()].name;
    RuleProgram rule = builtin(name);
    Schedule s = simulate(inst, rule, static_cast<std::uint64_t>(trial));
    auto report = validate_schedule(inst, s);
    ASSERT_TRUE(report.ok()) << name << ": " << report.violations.front().message;
    ASSERT_TRUE(is_non_delay(inst, s)) << name << "\n" << serialize_instance(inst);
    ASSERT_GE(s.makespan, makespan_lower_bound(inst));
    ASSERT_EQ(simulate(inst, rule, static_cast<std::uint64_t>(trial)), s);
  }
}

TEST(Property, NeverBeatsTheOptimum) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    Instance inst = random_instance(gen, 3, 3, trial % 3 == 0);
    Time opt = brute_force_optimal(inst);
    for (const auto& b : kBuiltinRules) ASSERT_GE(simulate(inst, builtin(b.name), 9).makespan, opt);
  }
}

TEST(Property, PositiveScalingKeepsDecisions) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    Instance inst = random_instance(gen, 6, 4, true);
    const auto& b = kBuiltinRules[trial % kBuiltinRules.size()];
    RuleProgram base = builtin(b.name);
    RuleProgram scaled = parse_rule("2.5 * (" + std::string(b.source) + ")");
    std::vector<std::size_t> d1, d2;
    simulate(inst, base, 4, [&](const Decision& d) { d1.push_back(d.chosen_job); });
    simulate(inst, scaled, 4, [&](const Decision& d) { d2.push_back(d.chosen_job); });
    EXPECT_EQ(d1, d2) << b.name;
  }
}

TEST(SplitMix, UniformIntRangeAndDeterminism) {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    auto x = a.uniform_int(50, 100);
    EXPECT_GE(x, 50);
    EXPECT_LE(x, 100);
    EXPECT_EQ(x, b.uniform_int(50, 100));
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

}  // namespace
}  // namespace seevo
