#pragma once

// Non-delay dispatching simulation. Time jumps between events (an operation
// finishing or a job arriving); at each event every idle machine, in index
// order, starts the ready operation its rule scores highest.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "seevo/core.hpp"
#include "seevo/rulelang.hpp"

namespace seevo {

// Portable seeded generator state for the RAND feature. SplitMix64 keeps the
// stream identical across standard library implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>((*this)());
    // rejection sampling keeps the draw unbiased
    std::uint64_t limit = max() - max() % span;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent seed for a named sub-stream.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  SplitMix64 g(root ^ (stream * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull));
  g();
  return g();
}

struct SimState {
  Time now = 0;
  std::vector<Time> machine_free_at;
  std::vector<std::size_t> job_next_op;
  std::vector<Time> job_ready_at;  // max(arrival, end of previous op)
  Schedule committed;

  explicit SimState(const Instance& inst)
      : machine_free_at(inst.machine_count(), 0),
        job_next_op(inst.job_count(), 0),
        job_ready_at(inst.arrival_times()) {}
};

// Fills every feature except RAND, which the caller draws.
inline FeatureVector compute_features(const SimState& state, const Instance& inst, const Operation& candidate,
                                      double rand_draw) {
  const std::size_t j = candidate.job_id;
  const std::size_t k = candidate.op_index;
  const auto& route = inst.route(j);
  FeatureVector fv;
  fv[Feature::PT] = static_cast<double>(candidate.processing_time);
  fv[Feature::TWK] = static_cast<double>(inst.total_work(j));
  fv[Feature::TWKR] = static_cast<double>(inst.remaining_work(j, k));
  fv[Feature::SRM] = static_cast<double>(inst.remaining_work(j, k) - candidate.processing_time);
  fv[Feature::NOPS_REMAINING] = static_cast<double>(route.size() - k);
  fv[Feature::SSO] = k + 1 < route.size() ? static_cast<double>(route[k + 1].processing_time) : 0.0;
  fv[Feature::LSO] = static_cast<double>(inst.max_subsequent(j, k));
  fv[Feature::ARRIVAL] = static_cast<double>(inst.arrival(j));
  Time ready = std::max(inst.arrival(j), state.job_ready_at[j]);
  fv[Feature::WAIT] = static_cast<double>(std::max<Time>(0, state.now - ready));
  fv[Feature::NOW] = static_cast<double>(state.now);
  fv[Feature::RAND] = rand_draw;
  return fv;
}

// RAND is drawn exactly once per (decision point, candidate).
inline FeatureVector compute_features(const SimState& state, const Instance& inst, const Operation& candidate,
                                      SplitMix64& rng) {
  return compute_features(state, inst, candidate, rng.uniform());
}

inline std::string describe(const FeatureVector& fv) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (i) out << ", ";
    out << kFeatureNames[i] << '=' << fv.values[i];
  }
  return out.str();
}

// One dispatch decision, reported to an optional observer.
struct Decision {
  Time time = 0;
  std::size_t machine = 0;
  std::vector<std::size_t> candidate_jobs;  // ascending job id
  std::vector<double> scores;
  std::size_t chosen_job = 0;
};

using DecisionObserver = std::function<void(const Decision&)>;

inline Schedule simulate(const Instance& inst, const RuleProgram& rule, std::uint64_t seed,
                         const DecisionObserver& observer = {}) {
  SimState state(inst);
  SplitMix64 rng(seed);
  const std::size_t total = inst.operation_count();
  state.committed.entries.reserve(total);

  // Jobs whose next op runs on each machine, sorted by job id.
  std::vector<std::vector<std::size_t>> waiting(inst.machine_count());
  std::priority_queue<Time, std::vector<Time>, std::greater<>> events;
  for (std::size_t j = 0; j < inst.job_count(); ++j) {
    waiting[inst.op(j, 0).machine_id].push_back(j);
    events.push(inst.arrival(j));
  }

  std::vector<std::size_t> candidates;
  std::vector<double> scores;
  Decision decision;
  std::size_t done = 0;
  while (done < total) {
    bool dispatched = true;
    while (dispatched) {
      dispatched = false;
      for (std::size_t m = 0; m < inst.machine_count(); ++m) {
        if (state.machine_free_at[m] > state.now) continue;
        auto& queue = waiting[m];
        candidates.clear();
        for (std::size_t j : queue)
          if (state.job_ready_at[j] <= state.now) candidates.push_back(j);
        if (candidates.empty()) continue;

        scores.clear();
        std::size_t best = 0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          std::size_t j = candidates[c];
          const Operation& op = inst.op(j, state.job_next_op[j]);
          FeatureVector fv = compute_features(state, inst, op, rng);
          double score;
          try {
            score = eval_rule(rule, fv);
          } catch (const RuleEvalError& e) {
            throw RuleEvalError(std::string(e.what()) + " with features {" + describe(fv) + "}");
          }
          scores.push_back(score);
          if (score > scores[best]) best = c;  // strict: ties keep the lowest job id
        }

        std::size_t j = candidates[best];
        std::size_t k = state.job_next_op[j];
        const Operation& op = inst.op(j, k);
        Time end = state.now + op.processing_time;
        state.committed.entries.push_back({j, k, m, state.now, end});
        state.committed.makespan = std::max(state.committed.makespan, end);
        state.machine_free_at[m] = end;
        state.job_ready_at[j] = end;
        state.job_next_op[j] = k + 1;
        queue.erase(std::find(queue.begin(), queue.end(), j));
        if (k + 1 < inst.route(j).size()) {
          auto& next_queue = waiting[inst.op(j, k + 1).machine_id];
          next_queue.insert(std::lower_bound(next_queue.begin(), next_queue.end(), j), j);
        }
        events.push(end);
        ++done;
        dispatched = true;

        if (observer) {
          decision.time = state.now;
          decision.machine = m;
          decision.candidate_jobs = candidates;
          decision.scores = scores;
          decision.chosen_job = j;
          observer(decision);
        }
      }
    }
    if (done == total) break;
    while (!events.empty() && events.top() <= state.now) events.pop();
    if (events.empty()) throw std::logic_error("simulation stalled with unscheduled operations");
    state.now = events.top();
  }
  return state.committed;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle for tiny instances: depth-first enumeration of active
// schedules (Giffler-Thompson branching) with exact-state memoization and a
// load-based bound.

class OpBudgetExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct BruteForce {
  const Instance& inst;
  Time best = std::numeric_limits<Time>::max();
  std::vector<std::size_t> next_op;
  std::vector<Time> job_ready;
  std::vector<Time> machine_free;
  std::vector<Time> machine_load_left;
  std::unordered_set<std::string> seen;

  explicit BruteForce(const Instance& i)
      : inst(i), next_op(i.job_count(), 0), job_ready(i.arrival_times()), machine_free(i.machine_count(), 0),
        machine_load_left(i.machine_count(), 0) {
    for (const auto& route : i.jobs())
      for (const auto& o : route) machine_load_left[o.machine_id] += o.processing_time;
  }

  std::string key() const {
    std::string k;
    auto put = [&k](std::uint64_t v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (auto v : next_op) put(v);
    for (auto v : job_ready) put(static_cast<std::uint64_t>(v));
    for (auto v : machine_free) put(static_cast<std::uint64_t>(v));
    return k;
  }

  Time bound() const {
    Time b = 0;
    for (std::size_t j = 0; j < inst.job_count(); ++j) {
      Time left = next_op[j] < inst.route(j).size() ? inst.remaining_work(j, next_op[j]) : 0;
      b = std::max(b, job_ready[j] + left);
    }
    for (std::size_t m = 0; m < inst.machine_count(); ++m) b = std::max(b, machine_free[m] + machine_load_left[m]);
    return b;
  }

  void search() {
    if (bound() >= best) return;
    if (!seen.insert(key()).second) return;

    Time min_end = std::numeric_limits<Time>::max();
    std::size_t pivot = inst.job_count();
    for (std::size_t j = 0; j < inst.job_count(); ++j) {
      if (next_op[j] >= inst.route(j).size()) continue;
      const auto& o = inst.op(j, next_op[j]);
      Time end = std::max(job_ready[j], machine_free[o.machine_id]) + o.processing_time;
      if (end < min_end) {
        min_end = end;
        pivot = j;
      }
    }
    if (pivot == inst.job_count()) {
      Time span = 0;
      for (Time t : job_ready) span = std::max(span, t);
      best = std::min(best, span);
      return;
    }
    std::size_t machine = inst.op(pivot, next_op[pivot]).machine_id;
    for (std::size_t j = 0; j < inst.job_count(); ++j) {
      if (next_op[j] >= inst.route(j).size()) continue;
      const auto& o = inst.op(j, next_op[j]);
      if (o.machine_id != machine) continue;
      Time start = std::max(job_ready[j], machine_free[machine]);
      if (j != pivot && start >= min_end) continue;

      Time saved_ready = job_ready[j];
      Time saved_free = machine_free[machine];
      job_ready[j] = machine_free[machine] = start + o.processing_time;
      machine_load_left[machine] -= o.processing_time;
      ++next_op[j];
      search();
      --next_op[j];
      machine_load_left[machine] += o.processing_time;
      job_ready[j] = saved_ready;
      machine_free[machine] = saved_free;
    }
  }
};

}  // namespace detail

inline Time brute_force_optimal(const Instance& inst, std::size_t op_budget = 9) {
  if (inst.operation_count() > op_budget)
    throw OpBudgetExceeded("instance has " + std::to_string(inst.operation_count()) +
                           " operations, budget is " + std::to_string(op_budget));
  detail::BruteForce search(inst);
  search.search();
  return search.best;
}

}  // namespace seevo
