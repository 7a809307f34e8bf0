#pragma once

// Job shop data model: instances, schedules, the standard instance text
// format and a feasibility checker.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seevo {

using Time = std::int64_t;

struct Operation {
  std::size_t job_id = 0;
  std::size_t op_index = 0;
  std::size_t machine_id = 0;
  Time processing_time = 0;

  friend bool operator==(const Operation&, const Operation&) = default;
};

// Thrown by load_instance; carries the 1-based line of the offending input.
class InstanceFormatError : public std::runtime_error {
 public:
  InstanceFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Immutable after construction. Per-job work summaries are cached so the
// simulator can read them in O(1) at every decision point.
class Instance {
 public:
  Instance() = default;

  // Routes are given as (machine, duration) pairs per job.
  Instance(std::string name, std::size_t machine_count,
           const std::vector<std::vector<std::pair<std::size_t, Time>>>& routes,
           std::vector<Time> arrival_times = {})
      : name_(std::move(name)), machine_count_(machine_count), arrivals_(std::move(arrival_times)) {
    if (machine_count_ == 0) throw std::invalid_argument("instance needs at least one machine");
    if (arrivals_.empty()) arrivals_.assign(routes.size(), 0);
    if (arrivals_.size() != routes.size())
      throw std::invalid_argument("arrival_times length differs from job count");
    jobs_.reserve(routes.size());
    for (std::size_t j = 0; j < routes.size(); ++j) {
      if (routes[j].empty()) throw std::invalid_argument("job " + std::to_string(j) + " has an empty route");
      if (arrivals_[j] < 0) throw std::invalid_argument("negative arrival time for job " + std::to_string(j));
      std::vector<Operation> route;
      route.reserve(routes[j].size());
      for (std::size_t k = 0; k < routes[j].size(); ++k) {
        auto [machine, duration] = routes[j][k];
        if (machine >= machine_count_)
          throw std::invalid_argument("machine index " + std::to_string(machine) + " out of range");
        if (duration < 0) throw std::invalid_argument("negative processing time");
        route.push_back(Operation{j, k, machine, duration});
      }
      jobs_.push_back(std::move(route));
    }
    build_summaries();
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t machine_count() const noexcept { return machine_count_; }
  std::size_t job_count() const noexcept { return jobs_.size(); }
  const std::vector<std::vector<Operation>>& jobs() const noexcept { return jobs_; }
  const std::vector<Operation>& route(std::size_t job) const { return jobs_.at(job); }
  const Operation& op(std::size_t job, std::size_t index) const { return jobs_.at(job).at(index); }
  const std::vector<Time>& arrival_times() const noexcept { return arrivals_; }
  Time arrival(std::size_t job) const { return arrivals_.at(job); }

  std::size_t operation_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : jobs_) n += r.size();
    return n;
  }

  bool is_static() const noexcept {
    return std::all_of(arrivals_.begin(), arrivals_.end(), [](Time t) { return t == 0; });
  }

  // Sum of all processing times of a job.
  Time total_work(std::size_t job) const { return remaining_work_[job][0]; }
  // Work of ops index..end (inclusive of index).
  Time remaining_work(std::size_t job, std::size_t index) const { return remaining_work_[job][index]; }
  // Largest processing time strictly after index; 0 for the last op.
  Time max_subsequent(std::size_t job, std::size_t index) const { return max_after_[job][index]; }

  Instance with_arrivals(std::vector<Time> arrivals) const {
    std::vector<std::vector<std::pair<std::size_t, Time>>> routes;
    for (const auto& r : jobs_) {
      auto& out = routes.emplace_back();
      for (const auto& o : r) out.emplace_back(o.machine_id, o.processing_time);
    }
    return Instance(name_, machine_count_, routes, std::move(arrivals));
  }

  Instance renamed(std::string name) const {
    Instance copy = *this;
    copy.name_ = std::move(name);
    return copy;
  }

 private:
  void build_summaries() {
    remaining_work_.resize(jobs_.size());
    max_after_.resize(jobs_.size());
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      const auto& r = jobs_[j];
      remaining_work_[j].assign(r.size() + 1, 0);
      max_after_[j].assign(r.size(), 0);
      Time running_max = 0;
      for (std::size_t k = r.size(); k-- > 0;) {
        remaining_work_[j][k] = remaining_work_[j][k + 1] + r[k].processing_time;
        max_after_[j][k] = running_max;
        running_max = std::max(running_max, r[k].processing_time);
      }
    }
  }

  std::string name_;
  std::size_t machine_count_ = 0;
  std::vector<std::vector<Operation>> jobs_;
  std::vector<Time> arrivals_;
  std::vector<std::vector<Time>> remaining_work_;
  std::vector<std::vector<Time>> max_after_;
};

struct ScheduledOp {
  std::size_t job_id = 0;
  std::size_t op_index = 0;
  std::size_t machine_id = 0;
  Time start = 0;
  Time end = 0;

  friend bool operator==(const ScheduledOp&, const ScheduledOp&) = default;
};

struct Schedule {
  std::vector<ScheduledOp> entries;
  Time makespan = 0;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

inline Time makespan(const Schedule& sched) {
  if (sched.entries.empty()) throw std::invalid_argument("makespan of an empty schedule");
  Time best = sched.entries.front().end;
  for (const auto& e : sched.entries) best = std::max(best, e.end);
  return best;
}

// Two lower bounds on any feasible makespan: the busiest machine's load and
// the longest job (arrival plus total work).
inline Time makespan_lower_bound(const Instance& inst) {
  std::vector<Time> load(inst.machine_count(), 0);
  Time bound = 0;
  for (std::size_t j = 0; j < inst.job_count(); ++j) {
    for (const auto& o : inst.route(j)) load[o.machine_id] += o.processing_time;
    bound = std::max(bound, inst.arrival(j) + inst.total_work(j));
  }
  for (Time l : load) bound = std::max(bound, l);
  return bound;
}

// ---------------------------------------------------------------------------
// Standard JSSP text format

inline Instance load_instance(std::string_view text, std::string name) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      ++line_no;
      std::string line(text.substr(pos, nl - pos));
      auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '#') lines.emplace_back(line_no, line);
      pos = nl + 1;
    }
  }
  if (lines.empty()) throw InstanceFormatError(1, "missing header");

  auto read_ints = [](const std::pair<std::size_t, std::string>& line) {
    std::istringstream in(line.second);
    std::vector<long long> values;
    std::string token;
    while (in >> token) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) throw InstanceFormatError(line.first, "not an integer: '" + token + "'");
      values.push_back(v);
    }
    return values;
  };

  auto header = read_ints(lines.front());
  if (header.size() != 2) throw InstanceFormatError(lines.front().first, "header must be '<jobs> <machines>'");
  if (header[0] <= 0 || header[1] <= 0)
    throw InstanceFormatError(lines.front().first, "job and machine counts must be positive");
  auto n_jobs = static_cast<std::size_t>(header[0]);
  auto n_machines = static_cast<std::size_t>(header[1]);
  if (lines.size() - 1 < n_jobs)
    throw InstanceFormatError(lines.back().first + 1,
                              "expected " + std::to_string(n_jobs) + " job lines, found " +
                                  std::to_string(lines.size() - 1));
  if (lines.size() - 1 > n_jobs) throw InstanceFormatError(lines[n_jobs + 1].first, "unexpected trailing line");

  std::vector<std::vector<std::pair<std::size_t, Time>>> routes(n_jobs);
  for (std::size_t j = 0; j < n_jobs; ++j) {
    const auto& line = lines[j + 1];
    auto values = read_ints(line);
    if (values.size() != 2 * n_machines)
      throw InstanceFormatError(line.first, "expected " + std::to_string(2 * n_machines) + " tokens, found " +
                                                std::to_string(values.size()));
    for (std::size_t k = 0; k < n_machines; ++k) {
      long long machine = values[2 * k];
      long long duration = values[2 * k + 1];
      if (machine < 0 || static_cast<std::size_t>(machine) >= n_machines)
        throw InstanceFormatError(line.first, "machine index " + std::to_string(machine) + " out of range");
      if (duration < 0) throw InstanceFormatError(line.first, "negative duration " + std::to_string(duration));
      routes[j].emplace_back(static_cast<std::size_t>(machine), duration);
    }
  }
  return Instance(std::move(name), n_machines, routes);
}

// Writes the standard format. Arrival times are not representable there;
// dynamic instances go through the bench sidecar document instead.
inline std::string serialize_instance(const Instance& inst) {
  std::ostringstream out;
  out << inst.job_count() << ' ' << inst.machine_count() << '\n';
  for (const auto& route : inst.jobs()) {
    for (std::size_t k = 0; k < route.size(); ++k) {
      if (k) out << ' ';
      out << route[k].machine_id << ' ' << route[k].processing_time;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Feasibility

enum class ViolationKind { Coverage, UnknownOperation, Duration, Precedence, MachineOverlap, Arrival, Makespan };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Coverage: return "coverage";
    case ViolationKind::UnknownOperation: return "unknown operation";
    case ViolationKind::Duration: return "duration mismatch";
    case ViolationKind::Precedence: return "precedence";
    case ViolationKind::MachineOverlap: return "machine overlap";
    case ViolationKind::Arrival: return "arrival";
    case ViolationKind::Makespan: return "makespan mismatch";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(ViolationKind k) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; }));
  }
};

inline ValidationReport validate_schedule(const Instance& inst, const Schedule& sched) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::string msg) { report.violations.push_back({kind, std::move(msg)}); };
  auto label = [](std::size_t j, std::size_t k) {
    return "J" + std::to_string(j) + "/O" + std::to_string(k);
  };

  // Coverage: exactly one entry per (job, op).
  std::vector<std::vector<const ScheduledOp*>> slot(inst.job_count());
  for (std::size_t j = 0; j < inst.job_count(); ++j) slot[j].assign(inst.route(j).size(), nullptr);
  for (const auto& e : sched.entries) {
    if (e.job_id >= inst.job_count() || e.op_index >= inst.route(e.job_id).size()) {
      add(ViolationKind::UnknownOperation, "entry " + label(e.job_id, e.op_index) + " is not in the instance");
      continue;
    }
    auto& s = slot[e.job_id][e.op_index];
    if (s) {
      add(ViolationKind::Coverage, label(e.job_id, e.op_index) + " scheduled more than once");
      continue;
    }
    s = &e;
  }
  for (std::size_t j = 0; j < inst.job_count(); ++j)
    for (std::size_t k = 0; k < slot[j].size(); ++k)
      if (!slot[j][k]) add(ViolationKind::Coverage, label(j, k) + " missing from schedule");

  // Per-entry duration, machine and arrival checks; precedence along routes.
  for (std::size_t j = 0; j < inst.job_count(); ++j) {
    for (std::size_t k = 0; k < slot[j].size(); ++k) {
      const auto* e = slot[j][k];
      if (!e) continue;
      const auto& o = inst.op(j, k);
      if (e->machine_id != o.machine_id)
        add(ViolationKind::UnknownOperation, label(j, k) + " on machine " + std::to_string(e->machine_id) +
                                                 ", route says " + std::to_string(o.machine_id));
      if (e->end - e->start != o.processing_time)
        add(ViolationKind::Duration, label(j, k) + " lasts " + std::to_string(e->end - e->start) + ", expected " +
                                         std::to_string(o.processing_time));
      if (k == 0 && e->start < inst.arrival(j))
        add(ViolationKind::Arrival, label(j, k) + " starts at " + std::to_string(e->start) + " before arrival " +
                                        std::to_string(inst.arrival(j)));
      if (k > 0 && slot[j][k - 1] && e->start < slot[j][k - 1]->end)
        add(ViolationKind::Precedence, label(j, k) + " starts at " + std::to_string(e->start) +
                                           " before predecessor ends at " + std::to_string(slot[j][k - 1]->end));
    }
  }

  // Machine exclusivity: sorted by start, consecutive intervals must not overlap.
  std::vector<std::vector<const ScheduledOp*>> per_machine(inst.machine_count());
  for (const auto& e : sched.entries)
    if (e.machine_id < inst.machine_count()) per_machine[e.machine_id].push_back(&e);
  for (std::size_t m = 0; m < per_machine.size(); ++m) {
    auto& list = per_machine[m];
    std::stable_sort(list.begin(), list.end(), [](const ScheduledOp* a, const ScheduledOp* b) {
      return a->start < b->start || (a->start == b->start && a->end < b->end);
    });
    Time busy_until = std::numeric_limits<Time>::min();
    const ScheduledOp* holder = nullptr;
    for (const auto* e : list) {
      if (holder && e->start < busy_until && e->end > e->start && holder->end > holder->start)
        add(ViolationKind::MachineOverlap, "machine " + std::to_string(m) + ": " + label(e->job_id, e->op_index) +
                                               " overlaps " + label(holder->job_id, holder->op_index));
      if (e->end > busy_until || !holder) {
        busy_until = e->end;
        holder = e;
      }
    }
  }

  if (!sched.entries.empty()) {
    Time actual = makespan(sched);
    if (actual != sched.makespan)
      add(ViolationKind::Makespan,
          "recorded makespan " + std::to_string(sched.makespan) + ", entries end at " + std::to_string(actual));
  } else if (sched.makespan != 0) {
    add(ViolationKind::Makespan, "empty schedule with non-zero makespan");
  }
  return report;
}

}  // namespace seevo
