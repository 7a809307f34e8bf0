#pragma once

// Prompt templates, version v1. Placeholders are written {{name}}; every
// template must reference {{task}} so the task specification reaches the
// model on every request.

#include <string_view>

namespace seevo::prompts {

inline constexpr std::string_view kVersion = "v1";

inline constexpr std::string_view kGeneratorSystem =
    "You are an expert in production scheduling who designs priority dispatching rules for job shops. "
    "You answer with a single rule expression in a fenced code block.";

inline constexpr std::string_view kReflectorSystem =
    "You are an expert in production scheduling who analyses the performance of priority dispatching rules "
    "for job shops and gives short, concrete design hints.";

inline constexpr std::string_view kTaskSpecification = R"(Task: design a priority dispatching rule for a dynamic job shop.
Each job is a fixed sequence of operations, each on one machine for a given processing time.
Jobs may arrive over time. Whenever a machine becomes idle, every operation waiting for it is
scored by the rule and the operation with the HIGHEST score starts immediately. The objective
is to minimize the makespan (completion time of the last operation).

The rule is an arithmetic expression over these inputs (all numbers, per candidate operation):
  PT              processing time of the candidate operation
  TWK             total work of the job (sum of all its processing times)
  TWKR            work remaining in the job, including the candidate
  SRM             work remaining in the job after the candidate (TWKR - PT)
  NOPS_REMAINING  operations remaining in the job, including the candidate
  SSO             processing time of the operation right after the candidate (0 if none)
  LSO             largest processing time among the operations after the candidate (0 if none)
  ARRIVAL         arrival time of the job
  WAIT            time the candidate has been ready and waiting
  NOW             current time
  RAND            uniform random number in [0, 1)

Grammar: numbers, the inputs above, unary minus, + - * / with the usual precedence,
parentheses, and the functions min(a, b), max(a, b), abs(a), sqrt(a), log(a), exp(a).
Division by zero divides by 1 instead; log and sqrt of invalid arguments give 0.
Use a minus sign to prefer small values, e.g. -PT prefers the shortest operation.

Output format: exactly one expression inside a fenced code block, for example
```
-(PT / TWKR)
```)";

inline constexpr std::string_view kGenerationInstructions =
    "Reply with the new rule only, as one expression in a fenced code block. "
    "Use only the inputs and functions listed in the task.";

inline constexpr std::string_view kInit = R"({{task}}

Seed heuristics:
{{seeds}}

{{instructions}}
Write a new priority rule that explores a different idea from the seed heuristics.)";

inline constexpr std::string_view kCoReflect = R"({{task}}

Two rules were evaluated on {{cases}}. Lower mean makespan is better.

[Better rule] mean makespan {{better_fitness}}
```
{{better_source}}
```

[Worse rule] mean makespan {{worse_fitness}}
```
{{worse_source}}
```

Compare the two rules. Explain in a few sentences why the better rule performs better
and give hints for designing even better rules.)";

inline constexpr std::string_view kSelfReflect = R"({{task}}

A rule was refined using comparative feedback. Mean makespan on {{cases}}:

[Before] mean makespan {{before_fitness}}
```
{{before_source}}
```

[After] mean makespan {{after_fitness}}
```
{{after_source}}
```

Outcome: {{outcome}}.
{{direction}})";

inline constexpr std::string_view kSelfReflectWorse =
    "Performance worsened or stayed the same. Identify what in the new rule caused this and state "
    "clearly what future rules should avoid.";

inline constexpr std::string_view kSelfReflectBetter =
    "Performance improved. Identify the successful elements of the new rule and suggest how to "
    "reinforce them further.";

inline constexpr std::string_view kCollective = R"({{task}}

Long-term guidance collected so far:
{{memory}}

Recent reflections from this iteration:
{{reflections}}

Synthesize the above into concise long-term guidance (at most five bullet points) for
designing better priority rules.)";

inline constexpr std::string_view kCrossover = R"({{task}}

Parent rules, evaluated on {{cases}} (lower mean makespan is better):

[Better parent] mean makespan {{better_fitness}}
```
{{better_source}}
```

[Worse parent] mean makespan {{worse_fitness}}
```
{{worse_source}}
```

Reflection on the two parents:
{{reflection}}

{{instructions}}
Combine the strengths of both parents into one new rule.)";

inline constexpr std::string_view kSelfCrossover = R"({{task}}

Current rule, mean makespan {{fitness}} on {{cases}}:
```
{{source}}
```

Self-reflection on its recent change:
{{reflection}}

{{instructions}}
Write an improved version of the current rule that follows the self-reflection.)";

inline constexpr std::string_view kMutate = R"({{task}}

Elite rule, mean makespan {{elite_fitness}} on {{cases}}:
```
{{elite_source}}
```

Long-term guidance:
{{memory}}

{{instructions}}
Write a new variant of the elite rule that may perform better.)";

inline constexpr std::string_view kDefaultMemory =
    "Start from short processing times and balance them against the work remaining in the job.";

}  // namespace seevo::prompts
