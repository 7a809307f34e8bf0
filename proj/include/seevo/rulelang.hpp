#pragma once

// Priority-rule expression language. A rule is an arithmetic expression
// over the dispatch features of one candidate operation; the simulator
// dispatches the candidate with the highest score.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | FEATURE | func '(' expr (',' expr)* ')' | '(' expr ')'
//
// '#' starts a comment that runs to the end of the line.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seevo {

enum class Feature : std::uint8_t { PT, TWK, TWKR, SRM, NOPS_REMAINING, SSO, LSO, ARRIVAL, WAIT, NOW, RAND };

inline constexpr std::size_t kFeatureCount = 11;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "PT", "TWK", "TWKR", "SRM", "NOPS_REMAINING", "SSO", "LSO", "ARRIVAL", "WAIT", "NOW", "RAND"};

inline std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

inline std::optional<Feature> feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  return std::nullopt;
}

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

enum class Func : std::uint8_t { Min, Max, Abs, Sqrt, Log, Exp };

struct FuncInfo {
  Func func;
  std::string_view name;
  int arity;
};

inline constexpr std::array<FuncInfo, 6> kFunctions = {{{Func::Min, "min", 2},
                                                        {Func::Max, "max", 2},
                                                        {Func::Abs, "abs", 1},
                                                        {Func::Sqrt, "sqrt", 1},
                                                        {Func::Log, "log", 1},
                                                        {Func::Exp, "exp", 1}}};

inline const FuncInfo& func_info(Func f) { return kFunctions[static_cast<std::size_t>(f)]; }

enum class NodeKind : std::uint8_t { Literal, Feature, Neg, Add, Sub, Mul, Div, Call };

// Expression nodes are stored in post-order: children always precede their
// parent, the root is the last node, and every subtree occupies a contiguous
// index range. Evaluation is a single forward pass.
struct Node {
  NodeKind kind = NodeKind::Literal;
  Feature feature = Feature::PT;
  Func func = Func::Min;
  double value = 0.0;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;

  friend bool operator==(const Node&, const Node&) = default;
};

using Ast = std::vector<Node>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : std::runtime_error("parse error at " + std::to_string(position) + ": " + message),
        position_(position),
        message_(message) {}
  std::size_t position() const noexcept { return position_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t position_;
  std::string message_;
};

class RuleEvalError : public std::runtime_error {
 public:
  explicit RuleEvalError(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_binary(NodeKind k) {
  return k == NodeKind::Add || k == NodeKind::Sub || k == NodeKind::Mul || k == NodeKind::Div;
}

// Number of nodes in the subtree rooted at `root`.
inline std::size_t subtree_size(const Ast& ast, std::size_t root) {
  const Node& n = ast[root];
  std::size_t size = 1;
  if (n.lhs >= 0) size += subtree_size(ast, static_cast<std::size_t>(n.lhs));
  if (n.rhs >= 0) size += subtree_size(ast, static_cast<std::size_t>(n.rhs));
  return size;
}

// Copies the subtree rooted at `root` into a standalone post-order Ast.
inline Ast extract_subtree(const Ast& ast, std::size_t root) {
  std::size_t first = root + 1 - subtree_size(ast, root);
  Ast out(ast.begin() + static_cast<std::ptrdiff_t>(first), ast.begin() + static_cast<std::ptrdiff_t>(root) + 1);
  for (auto& n : out) {
    if (n.lhs >= 0) n.lhs -= static_cast<std::int32_t>(first);
    if (n.rhs >= 0) n.rhs -= static_cast<std::int32_t>(first);
  }
  return out;
}

// Replaces the subtree rooted at `root` with `replacement`.
inline Ast replace_subtree(const Ast& ast, std::size_t root, const Ast& replacement) {
  std::size_t first = root + 1 - subtree_size(ast, root);
  auto delta = static_cast<std::int32_t>(replacement.size()) - static_cast<std::int32_t>(root + 1 - first);
  auto old_root = static_cast<std::int32_t>(root);
  auto new_root = static_cast<std::int32_t>(first + replacement.size()) - 1;
  Ast out(ast.begin(), ast.begin() + static_cast<std::ptrdiff_t>(first));
  for (Node n : replacement) {
    if (n.lhs >= 0) n.lhs += static_cast<std::int32_t>(first);
    if (n.rhs >= 0) n.rhs += static_cast<std::int32_t>(first);
    out.push_back(n);
  }
  auto remap = [&](std::int32_t child) {
    if (child < 0 || child < static_cast<std::int32_t>(first)) return child;
    if (child == old_root) return new_root;
    return child + delta;
  };
  for (std::size_t i = root + 1; i < ast.size(); ++i) {
    Node n = ast[i];
    n.lhs = remap(n.lhs);
    n.rhs = remap(n.rhs);
    out.push_back(n);
  }
  return out;
}

// Builds `op(lhs, rhs)` (or `op(lhs)` when rhs is empty) from two standalone Asts.
inline Ast combine(NodeKind kind, const Ast& lhs, const Ast& rhs = {}, Func func = Func::Min) {
  Ast out = lhs;
  Node parent;
  parent.kind = kind;
  parent.func = func;
  parent.lhs = static_cast<std::int32_t>(lhs.size()) - 1;
  if (!rhs.empty()) {
    auto offset = static_cast<std::int32_t>(lhs.size());
    for (Node n : rhs) {
      if (n.lhs >= 0) n.lhs += offset;
      if (n.rhs >= 0) n.rhs += offset;
      out.push_back(n);
    }
    parent.rhs = static_cast<std::int32_t>(out.size()) - 1;
  }
  out.push_back(parent);
  return out;
}

namespace detail {

inline int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    default: return 4;
  }
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "0";
  return std::string(buf.data(), end);
}

inline void print(const Ast& ast, std::size_t i, std::string& out) {
  const Node& n = ast[i];
  auto child = [&](std::int32_t c, bool parens) {
    if (parens) out += '(';
    print(ast, static_cast<std::size_t>(c), out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case NodeKind::Literal: out += format_number(n.value); return;
    case NodeKind::Feature: out += feature_name(n.feature); return;
    case NodeKind::Neg:
      out += '-';
      child(n.lhs, precedence(ast[static_cast<std::size_t>(n.lhs)]) <= 3);
      return;
    case NodeKind::Call: {
      out += func_info(n.func).name;
      out += '(';
      child(n.lhs, false);
      if (n.rhs >= 0) {
        out += ", ";
        child(n.rhs, false);
      }
      out += ')';
      return;
    }
    default: {
      int p = precedence(n);
      child(n.lhs, precedence(ast[static_cast<std::size_t>(n.lhs)]) < p);
      switch (n.kind) {
        case NodeKind::Add: out += " + "; break;
        case NodeKind::Sub: out += " - "; break;
        case NodeKind::Mul: out += " * "; break;
        default: out += " / "; break;
      }
      const Node& r = ast[static_cast<std::size_t>(n.rhs)];
      child(n.rhs, is_binary(r.kind) && precedence(r) <= p);
      return;
    }
  }
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string_view text;
  double number = 0.0;
};

inline std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + std::string(t.text) + "'";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) { tokenize(); }

  Ast parse() {
    expr(0);
    if (peek().kind != Tok::End) throw ParseError(peek().pos, "unexpected token " + describe(peek()));
    return std::move(ast_);
  }

 private:
  static constexpr int kMaxDepth = 200;

  void tokenize() {
    std::size_t i = 0;
    while (i < src_.size()) {
      char c = src_[i];
      if (c == '#') {
        while (i < src_.size() && src_[i] != '\n') ++i;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
        continue;
      }
      std::size_t start = i;
      if ((c >= '0' && c <= '9') || c == '.') {
        while (i < src_.size() && ((src_[i] >= '0' && src_[i] <= '9') || src_[i] == '.')) ++i;
        if (i < src_.size() && (src_[i] == 'e' || src_[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
          if (j < src_.size() && src_[j] >= '0' && src_[j] <= '9') {
            i = j;
            while (i < src_.size() && src_[i] >= '0' && src_[i] <= '9') ++i;
          }
        }
        std::string_view text = src_.substr(start, i - start);
        double value = 0.0;
        auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc::result_out_of_range) throw ParseError(start, "number out of range '" + std::string(text) + "'");
        if (ec != std::errc{} || end != text.data() + text.size())
          throw ParseError(start, "malformed number '" + std::string(text) + "'");
        if (!std::isfinite(value)) throw ParseError(start, "number out of range '" + std::string(text) + "'");
        tokens_.push_back({Tok::Number, start, text, value});
        continue;
      }
      if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_') {
        while (i < src_.size() && ((src_[i] >= 'A' && src_[i] <= 'Z') || (src_[i] >= 'a' && src_[i] <= 'z') ||
                                   (src_[i] >= '0' && src_[i] <= '9') || src_[i] == '_'))
          ++i;
        tokens_.push_back({Tok::Ident, start, src_.substr(start, i - start)});
        continue;
      }
      Tok kind;
      switch (c) {
        case '+': kind = Tok::Plus; break;
        case '-': kind = Tok::Minus; break;
        case '*': kind = Tok::Star; break;
        case '/': kind = Tok::Slash; break;
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case ',': kind = Tok::Comma; break;
        default: throw ParseError(start, std::string("unexpected character '") + c + "'");
      }
      tokens_.push_back({kind, start, src_.substr(start, 1)});
      ++i;
    }
    tokens_.push_back({Tok::End, src_.size(), {}});
  }

  const Token& peek() const { return tokens_[cursor_]; }
  const Token& next() { return tokens_[cursor_++]; }

  std::int32_t push(Node n) {
    ast_.push_back(n);
    return static_cast<std::int32_t>(ast_.size()) - 1;
  }

  std::int32_t binary(NodeKind kind, std::int32_t lhs, std::int32_t rhs) {
    Node n;
    n.kind = kind;
    n.lhs = lhs;
    n.rhs = rhs;
    return push(n);
  }

  void guard_depth(int depth) const {
    if (depth > kMaxDepth) throw ParseError(peek().pos, "expression nested too deeply");
  }

  std::int32_t expr(int depth) {
    guard_depth(depth);
    std::int32_t lhs = term(depth + 1);
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      NodeKind kind = next().kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      std::int32_t rhs = term(depth + 1);
      lhs = binary(kind, lhs, rhs);
    }
    return lhs;
  }

  std::int32_t term(int depth) {
    std::int32_t lhs = unary(depth + 1);
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      NodeKind kind = next().kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      std::int32_t rhs = unary(depth + 1);
      lhs = binary(kind, lhs, rhs);
    }
    return lhs;
  }

  std::int32_t unary(int depth) {
    guard_depth(depth);
    if (peek().kind == Tok::Minus) {
      next();
      Node n;
      n.kind = NodeKind::Neg;
      n.lhs = unary(depth + 1);
      return push(n);
    }
    return primary(depth + 1);
  }

  std::int32_t primary(int depth) {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Number: {
        Node n;
        n.kind = NodeKind::Literal;
        n.value = t.number;
        return push(n);
      }
      case Tok::LParen: {
        std::int32_t inner = expr(depth + 1);
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        if (auto f = feature_from_name(t.text)) {
          if (peek().kind == Tok::LParen) throw ParseError(peek().pos, "feature '" + std::string(t.text) + "' is not a function");
          Node n;
          n.kind = NodeKind::Feature;
          n.feature = *f;
          return push(n);
        }
        for (const auto& info : kFunctions) {
          if (info.name != t.text) continue;
          expect(Tok::LParen, "'(' after " + std::string(info.name));
          std::vector<std::int32_t> args;
          if (peek().kind == Tok::RParen) {
            // zero arguments; arity check below reports it
          } else {
            args.push_back(expr(depth + 1));
            while (peek().kind == Tok::Comma) {
              next();
              args.push_back(expr(depth + 1));
            }
          }
          expect(Tok::RParen, "')'");
          if (static_cast<int>(args.size()) != info.arity)
            throw ParseError(t.pos, std::string(info.name) + " expects " + std::to_string(info.arity) +
                                        " argument(s), got " + std::to_string(args.size()));
          Node n;
          n.kind = NodeKind::Call;
          n.func = info.func;
          n.lhs = args[0];
          if (info.arity == 2) n.rhs = args[1];
          return push(n);
        }
        throw ParseError(t.pos, "unknown identifier '" + std::string(t.text) + "'");
      }
      case Tok::End: throw ParseError(t.pos, "expected operand at end of input");
      default: throw ParseError(t.pos, "expected operand, found " + describe(t));
    }
  }

  void expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) throw ParseError(peek().pos, "expected " + what + ", found " + describe(peek()));
    next();
  }

  std::string_view src_;
  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
  Ast ast_;
};

}  // namespace detail

inline std::string print_ast(const Ast& ast) {
  std::string out;
  if (!ast.empty()) detail::print(ast, ast.size() - 1, out);
  return out;
}

// A parsed rule. `source` is the text it was parsed from; `canonical()`
// re-prints the AST.
class RuleProgram {
 public:
  RuleProgram() = default;
  RuleProgram(std::string source, Ast ast) : source_(std::move(source)), ast_(std::move(ast)) {}

  const std::string& source() const noexcept { return source_; }
  const Ast& ast() const noexcept { return ast_; }
  std::string canonical() const { return print_ast(ast_); }
  bool uses(Feature f) const {
    for (const auto& n : ast_)
      if (n.kind == NodeKind::Feature && n.feature == f) return true;
    return false;
  }

  friend bool operator==(const RuleProgram& a, const RuleProgram& b) { return a.ast_ == b.ast_; }

 private:
  std::string source_;
  Ast ast_;
};

inline RuleProgram parse_rule(std::string_view source) {
  detail::Parser parser(source);
  return RuleProgram(std::string(source), parser.parse());
}

inline RuleProgram rule_from_ast(Ast ast) {
  std::string src = print_ast(ast);
  return RuleProgram(std::move(src), std::move(ast));
}

// Total-function semantics: x/0 evaluates as x/1, log of a non-positive
// value and sqrt of a negative value are 0. Any non-finite intermediate
// (overflow) raises RuleEvalError.
inline double eval_rule(const RuleProgram& rule, const FeatureVector& fv) {
  const Ast& ast = rule.ast();
  if (ast.empty()) throw RuleEvalError("empty rule");
  std::array<double, 64> small{};
  std::vector<double> large;
  double* vals = small.data();
  if (ast.size() > small.size()) {
    large.resize(ast.size());
    vals = large.data();
  }
  for (std::size_t i = 0; i < ast.size(); ++i) {
    const Node& n = ast[i];
    double a = n.lhs >= 0 ? vals[n.lhs] : 0.0;
    double b = n.rhs >= 0 ? vals[n.rhs] : 0.0;
    double r = 0.0;
    switch (n.kind) {
      case NodeKind::Literal: r = n.value; break;
      case NodeKind::Feature: r = fv[n.feature]; break;
      case NodeKind::Neg: r = -a; break;
      case NodeKind::Add: r = a + b; break;
      case NodeKind::Sub: r = a - b; break;
      case NodeKind::Mul: r = a * b; break;
      case NodeKind::Div: r = b == 0.0 ? a : a / b; break;
      case NodeKind::Call:
        switch (n.func) {
          case Func::Min: r = std::min(a, b); break;
          case Func::Max: r = std::max(a, b); break;
          case Func::Abs: r = std::fabs(a); break;
          case Func::Sqrt: r = a < 0.0 ? 0.0 : std::sqrt(a); break;
          case Func::Log: r = a <= 0.0 ? 0.0 : std::log(a); break;
          case Func::Exp: r = std::exp(a); break;
        }
        break;
    }
    if (!std::isfinite(r))
      throw RuleEvalError("non-finite value in '" + rule.canonical() + "' at node " + std::to_string(i));
    vals[i] = r;
  }
  return vals[ast.size() - 1];
}

// ---------------------------------------------------------------------------
// Builtin dispatching rules. Minimizing rules are negated so that the
// highest score always wins.

struct BuiltinRule {
  std::string_view name;
  std::string_view source;
};

inline constexpr std::array<BuiltinRule, 14> kBuiltinRules = {{
    {"SPT", "-PT"},
    {"LPT", "PT"},
    {"STPT", "-TWK"},
    {"MPSR", "NOPS_REMAINING"},
    {"TWKR_MOST", "TWKR"},  // most work remaining, candidate included
    {"SRM", "-SRM"},        // remaining work after the candidate
    {"SSO", "-SSO"},
    {"LSO", "LSO"},  // longest subsequent op, read as the max over later ops
    {"SPT_TWK", "-(PT * TWK)"},
    {"SPT_TWKR", "-(PT / TWKR)"},
    {"LPT_TWK", "PT / TWK"},
    {"SPT_PLUS_SSO", "-(PT + SSO)"},
    {"SPT_LSO", "-(PT / LSO)"},
    {"RANDOM", "RAND"},
}};

inline RuleProgram builtin(std::string_view name) {
  for (const auto& b : kBuiltinRules)
    if (b.name == name) return parse_rule(b.source);
  throw std::invalid_argument("unknown builtin rule '" + std::string(name) + "'");
}

inline std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& b : kBuiltinRules) names.emplace_back(b.name);
  return names;
}

}  // namespace seevo
