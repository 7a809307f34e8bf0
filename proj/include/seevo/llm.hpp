#pragma once

// Text-generation providers and prompt assembly.
//
// Three providers share one interface: a live chat-completion client, a
// transcript replayer, and an offline mutator that edits rule expressions
// directly so the evolutionary loop runs without a network.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "seevo/prompts.hpp"
#include "seevo/rulelang.hpp"
#include "seevo/simulator.hpp"

namespace seevo {

enum class RequestKind { Init, CoReflect, SelfReflect, Collective, Crossover, SelfCrossover, Mutate };

inline constexpr std::array<std::pair<RequestKind, std::string_view>, 7> kRequestKindNames = {{
    {RequestKind::Init, "init"},
    {RequestKind::CoReflect, "co-reflect"},
    {RequestKind::SelfReflect, "self-reflect"},
    {RequestKind::Collective, "collective"},
    {RequestKind::Crossover, "crossover"},
    {RequestKind::SelfCrossover, "self-crossover"},
    {RequestKind::Mutate, "mutate"},
}};

inline std::string_view to_string(RequestKind k) {
  for (auto [kind, name] : kRequestKindNames)
    if (kind == k) return name;
  return "?";
}

inline RequestKind request_kind_from_string(std::string_view s) {
  for (auto [kind, name] : kRequestKindNames)
    if (name == s) return kind;
  throw std::invalid_argument("unknown request kind '" + std::string(s) + "'");
}

inline bool is_reflection(RequestKind k) {
  return k == RequestKind::CoReflect || k == RequestKind::SelfReflect || k == RequestKind::Collective;
}

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  RequestKind kind = RequestKind::Init;
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 1.0;
  // Rule sources the request is about (parents, elite, seeds). Providers that
  // do not read prompts use these directly.
  std::vector<std::string> context_rules;
};

// One provider attempt, successful or not.
struct ChatExchange {
  RequestKind kind = RequestKind::Init;
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 1.0;
  std::vector<std::string> context_rules;
  std::string response;
  std::string error;  // empty on success
  int attempt = 1;
  double latency_ms = 0.0;
};

// A failed request that may be retried.
class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what, bool quota = false) : std::runtime_error(what), quota_(quota) {}
  bool quota() const noexcept { return quota_; }

 private:
  bool quota_;
};

class TranscriptExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  // Returns the assistant text or throws ProviderError.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Transcript

inline nlohmann::json to_json(const ChatExchange& e) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : e.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"kind", to_string(e.kind)},
          {"messages", messages},
          {"response", e.response},
          {"metadata",
           {{"model", e.model},
            {"temperature", e.temperature},
            {"context_rules", e.context_rules},
            {"error", e.error},
            {"attempt", e.attempt},
            {"latency_ms", e.latency_ms}}}};
}

inline ChatExchange exchange_from_json(const nlohmann::json& j) {
  ChatExchange e;
  e.kind = request_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& m : j.at("messages")) e.messages.push_back({m.at("role"), m.at("content")});
  e.response = j.at("response").get<std::string>();
  if (j.contains("metadata")) {
    const auto& meta = j["metadata"];
    e.model = meta.value("model", "");
    e.temperature = meta.value("temperature", 1.0);
    e.context_rules = meta.value("context_rules", std::vector<std::string>{});
    e.error = meta.value("error", "");
    e.attempt = meta.value("attempt", 1);
    e.latency_ms = meta.value("latency_ms", 0.0);
  }
  return e;
}

// Ordered record of every provider attempt; one JSON object per line on disk.
class Transcript {
 public:
  Transcript() = default;
  Transcript(const Transcript& other) : records_(other.records()) {}
  Transcript& operator=(const Transcript& other) {
    if (this != &other) {
      auto copy = other.records();
      std::lock_guard lock(mutex_);
      records_ = std::move(copy);
    }
    return *this;
  }

  void append(ChatExchange e) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(e));
  }

  std::vector<ChatExchange> records() const {
    std::lock_guard lock(mutex_);
    return records_;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
  }

  std::string to_jsonl() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& r : records_) out += to_json(r).dump() + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write transcript " + path.string());
    out << to_jsonl();
  }

  static Transcript parse(std::string_view jsonl) {
    Transcript t;
    std::size_t pos = 0, line_no = 0;
    while (pos < jsonl.size()) {
      auto nl = jsonl.find('\n', pos);
      if (nl == std::string_view::npos) nl = jsonl.size();
      ++line_no;
      auto line = jsonl.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      try {
        t.records_.push_back(exchange_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw std::runtime_error("transcript line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return t;
  }

  static Transcript load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read transcript " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

 private:
  mutable std::mutex mutex_;
  std::vector<ChatExchange> records_;
};

// ---------------------------------------------------------------------------
// Retry

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{0};
  double backoff_multiplier = 2.0;
};

struct Completion {
  std::string text;   // empty when every attempt failed
  std::string error;  // note from the last failed attempt
  int attempts = 0;

  bool ok() const noexcept { return error.empty(); }
};

// Sends `request` up to policy.max_attempts times. Every attempt lands in the
// transcript. ProviderError is absorbed into the returned Completion; other
// exceptions (exhausted or diverging replay) propagate.
inline Completion complete(Provider& provider, const ChatRequest& request, const RetryPolicy& policy,
                           Transcript* transcript = nullptr) {
  Completion result;
  auto backoff = policy.initial_backoff;
  for (int attempt = 1; attempt <= std::max(1, policy.max_attempts); ++attempt) {
    ChatExchange exchange{request.kind,  request.messages, request.model, request.temperature,
                          request.context_rules, {},    {},           attempt};
    auto started = std::chrono::steady_clock::now();
    try {
      exchange.response = provider.complete(request);
    } catch (const ProviderError& e) {
      exchange.error = e.what();
    }
    exchange.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    result.attempts = attempt;
    if (transcript) transcript->append(exchange);
    if (exchange.error.empty()) {
      result.text = std::move(exchange.response);
      result.error.clear();
      return result;
    }
    result.error = exchange.error;
    if (attempt < policy.max_attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(backoff.count() * policy.backoff_multiplier));
    }
  }
  result.error += " (after " + std::to_string(result.attempts) + " attempts)";
  return result;
}

// ---------------------------------------------------------------------------
// Response handling

inline std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Contents of the first fenced code block, else the last non-empty line.
inline std::string extract_rule(std::string_view response) {
  auto open = response.find("```");
  if (open != std::string_view::npos) {
    auto body = response.find('\n', open);
    if (body != std::string_view::npos) {
      auto close = response.find("```", body + 1);
      if (close == std::string_view::npos) close = response.size();
      return trim(response.substr(body + 1, close - body - 1));
    }
    // single-line fence: ```-PT```
    auto close = response.find("```", open + 3);
    if (close != std::string_view::npos) return trim(response.substr(open + 3, close - open - 3));
  }
  std::string last;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto nl = response.find('\n', pos);
    if (nl == std::string_view::npos) nl = response.size();
    auto line = trim(response.substr(pos, nl - pos));
    if (!line.empty()) last = line;
    pos = nl + 1;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Prompts

struct PromptBundle {
  std::string version = std::string(prompts::kVersion);
  std::string generator_system = std::string(prompts::kGeneratorSystem);
  std::string reflector_system = std::string(prompts::kReflectorSystem);
  std::string task_specification = std::string(prompts::kTaskSpecification);
  std::string generation_instructions = std::string(prompts::kGenerationInstructions);
  std::string default_memory = std::string(prompts::kDefaultMemory);
  std::string self_reflect_worse = std::string(prompts::kSelfReflectWorse);
  std::string self_reflect_better = std::string(prompts::kSelfReflectBetter);
  std::map<RequestKind, std::string> templates = {
      {RequestKind::Init, std::string(prompts::kInit)},
      {RequestKind::CoReflect, std::string(prompts::kCoReflect)},
      {RequestKind::SelfReflect, std::string(prompts::kSelfReflect)},
      {RequestKind::Collective, std::string(prompts::kCollective)},
      {RequestKind::Crossover, std::string(prompts::kCrossover)},
      {RequestKind::SelfCrossover, std::string(prompts::kSelfCrossover)},
      {RequestKind::Mutate, std::string(prompts::kMutate)},
  };

  // File names used by save()/load(); `<kind>.txt` holds each template.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& file, const std::string& text) {
      std::ofstream(dir / file, std::ios::binary) << text;
    };
    write("VERSION", version + "\n");
    write("generator_system.txt", generator_system);
    write("reflector_system.txt", reflector_system);
    write("task.txt", task_specification);
    write("instructions.txt", generation_instructions);
    write("default_memory.txt", default_memory);
    write("self_reflect_worse.txt", self_reflect_worse);
    write("self_reflect_better.txt", self_reflect_better);
    for (const auto& [kind, text] : templates) write(std::string(to_string(kind)) + ".txt", text);
  }

  // Starts from the built-in bundle and replaces whatever files exist in dir.
  static PromptBundle load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw PromptError("prompt directory not found: " + dir.string());
    PromptBundle b;
    auto read = [&](const std::string& file, std::string& into) {
      std::ifstream in(dir / file, std::ios::binary);
      if (!in) return;
      std::stringstream ss;
      ss << in.rdbuf();
      into = ss.str();
    };
    read("VERSION", b.version);
    b.version = trim(b.version);
    read("generator_system.txt", b.generator_system);
    read("reflector_system.txt", b.reflector_system);
    read("task.txt", b.task_specification);
    read("instructions.txt", b.generation_instructions);
    read("default_memory.txt", b.default_memory);
    read("self_reflect_worse.txt", b.self_reflect_worse);
    read("self_reflect_better.txt", b.self_reflect_better);
    for (auto& [kind, text] : b.templates) read(std::string(to_string(kind)) + ".txt", text);
    return b;
  }
};

using PromptValues = std::map<std::string, std::string>;

// Fixed precision so rendered prompts are reproducible.
inline std::string format_fitness(double fitness) {
  if (!std::isfinite(fitness)) return "invalid";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", fitness);
  return buf;
}

// Substitutes {{name}} placeholders. `task` and `instructions` come from the
// bundle; everything else must be supplied in `values`.
inline std::vector<ChatMessage> render_prompt(RequestKind kind, const PromptBundle& bundle,
                                              const PromptValues& values) {
  auto it = bundle.templates.find(kind);
  if (it == bundle.templates.end()) throw PromptError("no template for " + std::string(to_string(kind)));
  const std::string& tmpl = it->second;
  if (tmpl.find("{{task}}") == std::string::npos)
    throw PromptError("template " + std::string(to_string(kind)) + " does not include {{task}}");
  if (bundle.task_specification.empty()) throw PromptError("missing required section 'task'");

  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos);
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) throw PromptError("unterminated placeholder in " + std::string(to_string(kind)));
    out.append(tmpl, pos, open - pos);
    std::string key = tmpl.substr(open + 2, close - open - 2);
    if (key == "task") {
      out += bundle.task_specification;
    } else if (key == "instructions") {
      out += bundle.generation_instructions;
    } else {
      auto v = values.find(key);
      if (v == values.end())
        throw PromptError("missing required section '" + key + "' for " + std::string(to_string(kind)));
      out += v->second;
    }
    pos = close + 2;
  }
  const std::string& system = is_reflection(kind) ? bundle.reflector_system : bundle.generator_system;
  return {{"system", system}, {"user", out}};
}

// ---------------------------------------------------------------------------
// Providers

// Serves recorded responses in order. A recorded failure is re-raised so the
// retry loop consumes the same records it produced originally.
class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(std::vector<ChatExchange> records) : records_(std::move(records)) {}
  explicit ReplayProvider(const Transcript& t) : records_(t.records()) {}

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    if (cursor_ >= records_.size())
      throw TranscriptExhausted("transcript exhausted after " + std::to_string(records_.size()) + " records");
    const ChatExchange& rec = records_[cursor_++];
    if (rec.kind != request.kind)
      throw ReplayMismatch("transcript record " + std::to_string(cursor_ - 1) + " is " +
                           std::string(to_string(rec.kind)) + ", request is " + std::string(to_string(request.kind)));
    if (!rec.error.empty()) throw ProviderError(rec.error);
    return rec.response;
  }

  std::string name() const override { return "replay"; }
  std::size_t cursor() const {
    std::lock_guard lock(mutex_);
    return cursor_;
  }

 private:
  std::vector<ChatExchange> records_;
  std::size_t cursor_ = 0;
  mutable std::mutex mutex_;
};

struct LiveProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo-0125";
  std::string api_key;
  std::string path = "/chat/completions";
  std::chrono::seconds timeout{60};
};

// HTTP chat-completion client: POST {model, temperature, messages}, read
// choices[0].message.content.
class LiveProvider : public Provider {
 public:
  explicit LiveProvider(LiveProviderConfig cfg) : cfg_(std::move(cfg)) {
    auto scheme = cfg_.base_url.find("://");
    auto slash = cfg_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin_ = slash == std::string::npos ? cfg_.base_url : cfg_.base_url.substr(0, slash);
    prefix_ = slash == std::string::npos ? "" : cfg_.base_url.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  static nlohmann::json request_body(const ChatRequest& request, const std::string& model) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", request.model.empty() ? model : request.model},
            {"temperature", request.temperature},
            {"messages", messages}};
  }

  std::string complete(const ChatRequest& request) override {
    httplib::Client client(origin_);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    auto res = client.Post(prefix_ + cfg_.path, headers, request_body(request, cfg_.model).dump(), "application/json");
    if (!res) throw ProviderError("network error: " + httplib::to_string(res.error()));
    if (res->status == 429) throw ProviderError("HTTP 429: quota or rate limit exceeded", true);
    if (res->status < 200 || res->status >= 300)
      throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      auto body = nlohmann::json::parse(res->body);
      return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw ProviderError(std::string("malformed completion response: ") + e.what());
    }
  }

  std::string name() const override { return "live"; }

 private:
  LiveProviderConfig cfg_;
  std::string origin_;
  std::string prefix_;
};

// Deterministic stand-in for a language model. Generation requests are
// answered with structured edits of the context rules; reflection requests
// get fixed text. Every emitted rule parses.
class OfflineMutatorProvider : public Provider {
 public:
  static constexpr std::size_t kMaxNodes = 31;
  static constexpr std::string_view kReflectionText = "prefer shorter processing first";
  static constexpr std::string_view kCollectiveText =
      "prefer shorter processing first; weigh the work remaining in the job";

  explicit OfflineMutatorProvider(std::uint64_t seed) : rng_(seed) {}

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    if (request.kind == RequestKind::Collective) return std::string(kCollectiveText);
    if (is_reflection(request.kind)) return std::string(kReflectionText);
    return "Here is the rule:\n```\n" + generate(request.kind, request.context_rules) + "\n```\n";
  }

  std::string name() const override { return "offline"; }

  // Exposed for property tests.
  std::string generate(RequestKind kind, const std::vector<std::string>& context) {
    std::vector<Ast> parents;
    for (const auto& src : context) {
      try {
        parents.push_back(parse_rule(src).ast());
      } catch (const ParseError&) {
      }
    }
    if (parents.empty()) parents.push_back(parse_rule("-PT").ast());

    Ast out;
    if (kind == RequestKind::Crossover && parents.size() >= 2) {
      out = crossover(parents[0], parents[1]);
    } else if (kind == RequestKind::Init && parents.size() >= 2 && rng_.uniform() < 0.5) {
      std::size_t a = pick(parents.size()), b = pick(parents.size());
      out = crossover(parents[a], parents[b]);
    } else {
      out = mutate(parents[pick(parents.size())]);
    }
    if (out.size() > kMaxNodes) out = shrink(parents);
    return print_ast(out);
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

  Feature random_feature() {
    // RAND is left out; random priorities rarely help and make rules noisy.
    return static_cast<Feature>(pick(kFeatureCount - 1));
  }

  static Ast leaf(Feature f) {
    Node n;
    n.kind = NodeKind::Feature;
    n.feature = f;
    return {n};
  }

  static Ast literal(double v) {
    Node n;
    n.kind = NodeKind::Literal;
    n.value = v;
    return {n};
  }

  static Ast strip_negation(const Ast& a) {
    if (a.back().kind == NodeKind::Neg) return extract_subtree(a, static_cast<std::size_t>(a.back().lhs));
    return a;
  }

  NodeKind random_binary() {
    static constexpr NodeKind kinds[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::Div};
    return kinds[pick(4)];
  }

  std::vector<std::size_t> nodes_where(const Ast& a, bool (*pred)(const Node&)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (pred(a[i])) idx.push_back(i);
    return idx;
  }

  Ast crossover(const Ast& a, const Ast& b) {
    switch (pick(4)) {
      case 0: {  // combine both parents; shared negation stays outside
        NodeKind op = pick(2) == 0 ? NodeKind::Add : NodeKind::Mul;
        if (a.back().kind == NodeKind::Neg && b.back().kind == NodeKind::Neg)
          return combine(NodeKind::Neg, combine(op, strip_negation(a), strip_negation(b)));
        return combine(op, a, b);
      }
      case 1: {  // graft a subtree of b into a
        std::size_t at = pick(a.size());
        return replace_subtree(a, at, extract_subtree(b, pick(b.size())));
      }
      case 2: {
        std::size_t at = pick(b.size());
        return replace_subtree(b, at, extract_subtree(a, pick(a.size())));
      }
      default: return pick(2) == 0 ? a : b;
    }
  }

  Ast mutate(const Ast& a) {
    for (int tries = 0; tries < 8; ++tries) {
      switch (pick(5)) {
        case 0: {  // operand swap
          auto bins = nodes_where(a, [](const Node& n) { return is_binary(n.kind); });
          if (bins.empty()) break;
          std::size_t at = bins[pick(bins.size())];
          const Node& n = a[at];
          Ast swapped = combine(n.kind, extract_subtree(a, static_cast<std::size_t>(n.rhs)),
                                extract_subtree(a, static_cast<std::size_t>(n.lhs)));
          return replace_subtree(a, at, swapped);
        }
        case 1: {  // operator swap
          auto bins = nodes_where(a, [](const Node& n) { return is_binary(n.kind); });
          if (bins.empty()) break;
          Ast out = a;
          Node& n = out[bins[pick(bins.size())]];
          NodeKind k = random_binary();
          if (k == n.kind) k = k == NodeKind::Add ? NodeKind::Mul : NodeKind::Add;
          n.kind = k;
          return out;
        }
        case 2: {  // constant jitter, or scale a subtree by a fresh constant
          auto lits = nodes_where(a, [](const Node& n) { return n.kind == NodeKind::Literal; });
          double factor = std::round((0.5 + rng_.uniform()) * 1000.0) / 1000.0;
          if (!lits.empty()) {
            Ast out = a;
            Node& n = out[lits[pick(lits.size())]];
            n.value = std::round(std::fabs(n.value * factor) * 1000.0) / 1000.0;  // keep constants short
            if (!std::isfinite(n.value) || n.value > 1e6) n.value = 1.0;
            if (n.value == 0.0) n.value = 0.001;
            return out;
          }
          std::size_t at = pick(a.size());
          return replace_subtree(a, at, combine(NodeKind::Mul, literal(factor + 0.5), extract_subtree(a, at)));
        }
        case 3: {  // feature substitution: another feature, or a compound with the original
          auto feats = nodes_where(a, [](const Node& n) { return n.kind == NodeKind::Feature; });
          if (feats.empty()) break;
          std::size_t at = feats[pick(feats.size())];
          Ast replacement = leaf(random_feature());
          if (pick(2) == 0) replacement = combine(random_binary(), leaf(a[at].feature), replacement);
          return replace_subtree(a, at, replacement);
        }
        default: {  // wrap the rule with an extra term
          Ast term = leaf(random_feature());
          if (pick(3) == 0) term = combine(NodeKind::Call, term, {}, pick(2) == 0 ? Func::Sqrt : Func::Log);
          NodeKind op = pick(2) == 0 ? NodeKind::Add : NodeKind::Sub;
          if (a.back().kind == NodeKind::Neg) return combine(NodeKind::Neg, combine(op, strip_negation(a), term));
          return combine(op, a, term);
        }
      }
    }
    return replace_subtree(a, pick(a.size()), leaf(random_feature()));
  }

  // Fallback when an edit grows too large: the smallest parent with one
  // feature swapped.
  Ast shrink(const std::vector<Ast>& parents) {
    const Ast* smallest = &parents.front();
    for (const auto& p : parents)
      if (p.size() < smallest->size()) smallest = &p;
    Ast base = *smallest;
    if (base.size() > kMaxNodes) return combine(NodeKind::Neg, leaf(random_feature()));
    auto feats = nodes_where(base, [](const Node& n) { return n.kind == NodeKind::Feature; });
    if (feats.empty()) return base;
    return replace_subtree(base, feats[pick(feats.size())], leaf(random_feature()));
  }

  SplitMix64 rng_;
  std::mutex mutex_;
};

// Bundles a provider with prompts, retry policy and transcript so callers
// only supply stage data.
class LlmClient {
 public:
  LlmClient(Provider& provider, PromptBundle bundle, RetryPolicy retry, Transcript* transcript,
            std::string model = {}, double temperature = 1.0)
      : provider_(provider),
        bundle_(std::move(bundle)),
        retry_(retry),
        transcript_(transcript),
        model_(std::move(model)),
        temperature_(temperature) {}

  struct Reply {
    std::string prompt;  // rendered user message
    Completion completion;
  };

  Reply ask(RequestKind kind, const PromptValues& values, std::vector<std::string> context_rules = {}) {
    ChatRequest request;
    request.kind = kind;
    request.messages = render_prompt(kind, bundle_, values);
    request.model = model_;
    request.temperature = temperature_;
    request.context_rules = std::move(context_rules);
    Reply reply{request.messages.back().content, complete(provider_, request, retry_, transcript_)};
    return reply;
  }

  const PromptBundle& bundle() const noexcept { return bundle_; }
  Provider& provider() noexcept { return provider_; }

 private:
  Provider& provider_;
  PromptBundle bundle_;
  RetryPolicy retry_;
  Transcript* transcript_;
  std::string model_;
  double temperature_;
};

}  // namespace seevo
