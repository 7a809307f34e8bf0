#include <gtest/gtest.h>

#include <random>

#include "fuzz_util.hpp"
#include "seevo/rulelang.hpp"

namespace seevo {
namespace {

FeatureVector features(std::initializer_list<std::pair<Feature, double>> values) {
  FeatureVector fv;
  for (auto [f, v] : values) fv[f] = v;
  return fv;
}

TEST(ParseRule, UnaryMinusOfFeature) {
  RuleProgram r = parse_rule("-PT");
  ASSERT_EQ(r.ast().size(), 2u);
  EXPECT_EQ(r.ast()[0].kind, NodeKind::Feature);
  EXPECT_EQ(r.ast()[0].feature, Feature::PT);
  EXPECT_EQ(r.ast()[1].kind, NodeKind::Neg);
  EXPECT_EQ(r.ast()[1].lhs, 0);
}

TEST(ParseRule, MatchesBuiltinAst) {
  EXPECT_EQ(parse_rule("-(PT * TWK)"), builtin("SPT_TWK"));
  EXPECT_EQ(parse_rule(" - ( PT*TWK ) "), builtin("SPT_TWK"));
}

TEST(ParseRule, DanglingOperator) {
  try {
    parse_rule("PT +");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.message(), "expected operand at end of input");
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(ParseRule, ErrorKinds) {
  auto message = [](const char* src) {
    try {
      parse_rule(src);
    } catch (const ParseError& e) {
      return e.message();
    }
    return std::string("ok");
  };
  EXPECT_EQ(message("FOO"), "unknown identifier 'FOO'");
  EXPECT_EQ(message("min(PT)"), "min expects 2 argument(s), got 1");
  EXPECT_EQ(message("abs(PT, TWK)"), "abs expects 1 argument(s), got 2");
  EXPECT_EQ(message("PT)"), "unexpected token ')'");
  EXPECT_EQ(message("(PT"), "expected ')', found end of input");
  EXPECT_EQ(message(""), "expected operand at end of input");
  EXPECT_EQ(message("PT TWK"), "unexpected token 'TWK'");
  EXPECT_EQ(message("PT(1)"), "feature 'PT' is not a function");
  EXPECT_EQ(message("1e999"), "number out of range '1e999'");
  EXPECT_EQ(message("1..2"), "malformed number '1..2'");
  EXPECT_EQ(message("PT $ 2"), "unexpected character '$'");
  EXPECT_EQ(message(std::string(300, '(').c_str()), "expression nested too deeply");
}

TEST(ParseRule, PrecedenceAndAssociativity) {
  FeatureVector fv = features({{Feature::PT, 2}, {Feature::TWK, 3}, {Feature::SSO, 4}});
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("PT + TWK * SSO"), fv), 14);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("SSO - TWK - PT"), fv), -1);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("SSO / PT / PT"), fv), 1);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("-PT * TWK"), fv), -6);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("(PT + TWK) * SSO"), fv), 20);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("max(PT, min(TWK, SSO)) + abs(-1.5e1)"), fv), 18);
}

TEST(ParseRule, CommentsIgnored) {
  EXPECT_EQ(parse_rule("# best rule so far\n-(PT / TWKR)  # trailing\n"), builtin("SPT_TWKR"));
}

TEST(EvalRule, Examples) {
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("-PT"), features({{Feature::PT, 7}})), -7);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("-(PT/LSO)"), features({{Feature::PT, 4}, {Feature::LSO, 0}})), -4);
  EXPECT_NEAR(eval_rule(parse_rule("-(PT/TWKR)"), features({{Feature::PT, 5}, {Feature::TWKR, 17}})),
              -0.29411764705882354, 1e-15);
}

TEST(EvalRule, Guards) {
  FeatureVector fv = features({{Feature::PT, -4}});
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("log(PT)"), fv), 0);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("log(0)"), fv), 0);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("sqrt(PT)"), fv), 0);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("sqrt(16)"), fv), 4);
  EXPECT_DOUBLE_EQ(eval_rule(parse_rule("7 / 0"), fv), 7);
  EXPECT_THROW(eval_rule(parse_rule("exp(1000)"), fv), RuleEvalError);
  EXPECT_THROW(eval_rule(parse_rule("1e300 * 1e300"), fv), RuleEvalError);
  EXPECT_THROW(eval_rule(parse_rule("max(1, exp(1e9))"), fv), RuleEvalError);
}

TEST(Builtin, Catalog) {
  EXPECT_EQ(builtin("SPT").source(), "-PT");
  EXPECT_EQ(builtin("SPT_TWKR").source(), "-(PT / TWKR)");
  EXPECT_EQ(builtin("MPSR").source(), "NOPS_REMAINING");
  EXPECT_EQ(builtin_names().size(), 14u);
  EXPECT_THROW(builtin("EDD"), std::invalid_argument);
  for (const auto& b : kBuiltinRules) EXPECT_EQ(builtin(b.name).canonical(), b.source) << b.name;
}

TEST(Builtin, Semantics) {
  FeatureVector fv = features({{Feature::PT, 5},
                               {Feature::TWK, 17},
                               {Feature::TWKR, 17},
                               {Feature::SRM, 12},
                               {Feature::NOPS_REMAINING, 3},
                               {Feature::SSO, 3},
                               {Feature::LSO, 9},
                               {Feature::RAND, 0.25}});
  auto score = [&](const char* name) { return eval_rule(builtin(name), fv); };
  EXPECT_DOUBLE_EQ(score("SPT"), -5);
  EXPECT_DOUBLE_EQ(score("LPT"), 5);
  EXPECT_DOUBLE_EQ(score("STPT"), -17);
  EXPECT_DOUBLE_EQ(score("MPSR"), 3);
  EXPECT_DOUBLE_EQ(score("TWKR_MOST"), 17);
  EXPECT_DOUBLE_EQ(score("SRM"), -12);
  EXPECT_DOUBLE_EQ(score("SSO"), -3);
  EXPECT_DOUBLE_EQ(score("LSO"), 9);
  EXPECT_DOUBLE_EQ(score("SPT_TWK"), -85);
  EXPECT_DOUBLE_EQ(score("SPT_TWKR"), -5.0 / 17);
  EXPECT_DOUBLE_EQ(score("LPT_TWK"), 5.0 / 17);
  EXPECT_DOUBLE_EQ(score("SPT_PLUS_SSO"), -8);
  EXPECT_DOUBLE_EQ(score("SPT_LSO"), -5.0 / 9);
  EXPECT_DOUBLE_EQ(score("RANDOM"), 0.25);
}

TEST(Printer, MinimalParentheses) {
  EXPECT_EQ(parse_rule("(PT + TWK) + SSO").canonical(), "PT + TWK + SSO");
  EXPECT_EQ(parse_rule("PT + (TWK + SSO)").canonical(), "PT + (TWK + SSO)");
  EXPECT_EQ(parse_rule("PT - (TWK - SSO)").canonical(), "PT - (TWK - SSO)");
  EXPECT_EQ(parse_rule("(PT * TWK) / SSO").canonical(), "PT * TWK / SSO");
  EXPECT_EQ(parse_rule("PT * (TWK + SSO)").canonical(), "PT * (TWK + SSO)");
  EXPECT_EQ(parse_rule("--PT").canonical(), "-(-PT)");
  EXPECT_EQ(parse_rule("PT - -TWK").canonical(), "PT - -TWK");
  EXPECT_EQ(parse_rule("min(PT,-(TWK))").canonical(), "min(PT, -TWK)");
  EXPECT_EQ(parse_rule("0.1 + 1e300").canonical(), "0.1 + 1e+300");
}

TEST(Property, ParsePrintRoundTrip) {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 1000; ++i) {
    std::string src = testing::random_expression(gen);
    RuleProgram r = parse_rule(src);
    std::string printed = r.canonical();
    RuleProgram again = parse_rule(printed);
    ASSERT_EQ(again, r) << src << " -> " << printed;
    ASSERT_EQ(again.canonical(), printed);
  }
  for (const auto& b : kBuiltinRules) EXPECT_EQ(parse_rule(builtin(b.name).canonical()), builtin(b.name));
}

TEST(Property, EvaluatorTotality) {
  std::mt19937_64 gen(7);
  std::size_t finite = 0, errors = 0;
  for (int i = 0; i < 1000; ++i) {
    RuleProgram r = parse_rule(testing::random_expression(gen));
    FeatureVector fv = testing::random_features(gen);
    try {
      double v = eval_rule(r, fv);
      ASSERT_TRUE(std::isfinite(v));
      ++finite;
    } catch (const RuleEvalError&) {
      ++errors;
    }
  }
  EXPECT_EQ(finite + errors, 1000u);
  EXPECT_GT(finite, 500u);
}

TEST(Property, TokenSoupNeverCrashes) {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 2000; ++i) {
    std::string src = testing::random_token_soup(gen);
    try {
      RuleProgram r = parse_rule(src);
      EXPECT_EQ(parse_rule(r.canonical()), r) << src;
    } catch (const ParseError& e) {
      EXPECT_LE(e.position(), src.size());
    }
  }
}

TEST(AstEditing, ReplaceAndExtract) {
  RuleProgram r = parse_rule("PT * (TWK + SSO) - LSO");
  // root is Sub; its lhs is the Mul subtree
  std::size_t mul = static_cast<std::size_t>(r.ast().back().lhs);
  EXPECT_EQ(print_ast(extract_subtree(r.ast(), mul)), "PT * (TWK + SSO)");
  Ast replaced = replace_subtree(r.ast(), mul, parse_rule("max(NOW, 2)").ast());
  EXPECT_EQ(print_ast(replaced), "max(NOW, 2) - LSO");
  Ast root_swap = replace_subtree(r.ast(), r.ast().size() - 1, parse_rule("RAND").ast());
  EXPECT_EQ(print_ast(root_swap), "RAND");
  Ast combined = combine(NodeKind::Div, parse_rule("PT").ast(), parse_rule("TWK + 1").ast());
  EXPECT_EQ(print_ast(combined), "PT / (TWK + 1)");
  EXPECT_EQ(print_ast(combine(NodeKind::Neg, combined)), "-(PT / (TWK + 1))");
  EXPECT_EQ(print_ast(combine(NodeKind::Call, parse_rule("PT").ast(), {}, Func::Sqrt)), "sqrt(PT)");
}

}  // namespace
}  // namespace seevo
