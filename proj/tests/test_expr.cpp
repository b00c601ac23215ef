#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "gstress/expr.hpp"

using namespace gstress;

namespace {

ExprPtr P(const std::string& s) { return parse_expression(s); }

double eval(const std::string& s, std::span<const double> u, const Params& params = {}) {
  return evaluate(*P(s), u, params);
}

}  // namespace

TEST(Expr, ProductOfParameterAndFunctions) {
  const auto e = P("r*sin(u1)*cos(u2)");
  ASSERT_EQ(e->kind, ExprKind::binary);
  EXPECT_EQ(e->op, BinaryOp::mul);
  const auto& lhs = *e->children[0];
  ASSERT_EQ(lhs.kind, ExprKind::binary);
  EXPECT_EQ(lhs.children[0]->kind, ExprKind::parameter);
  EXPECT_EQ(lhs.children[0]->name, "r");
  EXPECT_EQ(lhs.children[1]->kind, ExprKind::function);
  EXPECT_EQ(lhs.children[1]->fn, ElementaryFn::sin);
  EXPECT_EQ(lhs.children[1]->children[0]->kind, ExprKind::variable);
  EXPECT_EQ(lhs.children[1]->children[0]->index, 0);
  const auto& rhs = *e->children[1];
  EXPECT_EQ(rhs.fn, ElementaryFn::cos);
  EXPECT_EQ(rhs.children[0]->index, 1);
}

TEST(Expr, PowerBindsTighterThanAddition) {
  const auto e = P("u1^2 + 3");
  ASSERT_EQ(e->kind, ExprKind::binary);
  EXPECT_EQ(e->op, BinaryOp::add);
  ASSERT_EQ(e->children[0]->kind, ExprKind::power);
  EXPECT_EQ(e->children[0]->exponent, 2);
  EXPECT_EQ(e->children[1]->kind, ExprKind::constant);
  EXPECT_EQ(e->children[1]->value, 3.0);
}

TEST(Expr, UnaryMinusAppliesToThePower) {
  const std::array<double, 1> u{3.0};
  EXPECT_DOUBLE_EQ(eval("-u1^2", u), -9.0);
  EXPECT_DOUBLE_EQ(eval("(-u1)^2", u), 9.0);
  EXPECT_DOUBLE_EQ(eval("2 - -u1", u), 5.0);
  EXPECT_DOUBLE_EQ(eval("u1^-2", u), 1.0 / 9.0);
}

TEST(Expr, LeftAssociativity) {
  const std::array<double, 1> u{0.0};
  EXPECT_DOUBLE_EQ(eval("8 - 3 - 2", u), 3.0);
  EXPECT_DOUBLE_EQ(eval("8 / 4 / 2", u), 1.0);
  EXPECT_DOUBLE_EQ(eval("1e-3 * 2.5E2", u), 0.25);
  EXPECT_DOUBLE_EQ(eval("pi", u), std::numbers::pi);
}

TEST(Expr, SyntaxErrorsCarryPosition) {
  try {
    P("sin u1");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 1);
  }
  try {
    parse_expression("u1 + * 2", nullptr, 7, 4);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7);
    EXPECT_EQ(e.column(), 10);
  }
  EXPECT_THROW(P("(u1 + 2"), ParseError);
  EXPECT_THROW(P("u1 2"), ParseError);
  EXPECT_THROW(P("u1^2.5"), ParseError);
  EXPECT_THROW(P("u5"), ParseError);
  EXPECT_THROW(P("foo(u1)"), ParseError);
  EXPECT_THROW(P("sin(u1, u2)"), ParseError);
  EXPECT_THROW(P(""), ParseError);
}

TEST(Expr, UnknownParametersRejectedWhenKnownSetGiven) {
  const std::set<std::string> known = {"r"};
  EXPECT_NO_THROW(parse_expression("r*u1 + pi", &known));
  EXPECT_THROW(parse_expression("R*u1", &known), ParseError);
}

TEST(Expr, UnboundParameterAtEvaluation) {
  const std::array<double, 1> u{1.0};
  EXPECT_THROW(eval("a*u1", u), ConfigError);
  EXPECT_DOUBLE_EQ(eval("a*u1", u, {{"a", 2.5}}), 2.5);
}

TEST(Expr, SingularEvaluationRaises) {
  const std::array<double, 1> u{0.0};
  EXPECT_THROW(eval("1/u1", u), SingularPointError);
  EXPECT_THROW(eval("log(u1)", u), SingularPointError);
  EXPECT_THROW(eval("sqrt(u1 - 1)", u), SingularPointError);
  EXPECT_THROW(eval("u1^-1", u), SingularPointError);
}

TEST(Expr, PrintParseRoundTrip) {
  const char* sources[] = {
      "r*sin(u1)*cos(u2)",  "u1^2 + 3",           "-u1^2 - (-u2)^3",        "exp(-u1/2)*cosh(u2) - tan(0.1)",
      "1e-7 + 123456.789", "sqrt(a^2 + u1^2)/log(2 + u2)", "-(-(-u1))", "sinh(u1)*u3^-2 + 0.1*u4",
  };
  for (const char* s : sources) {
    const auto a = P(s);
    const auto text = print_expression(*a);
    const auto b = P(text);
    EXPECT_TRUE(structurally_equal(*a, *b)) << s << " -> " << text;
    EXPECT_EQ(print_expression(*b), text);
  }
}

TEST(Expr, JetEvaluationMatchesRealEvaluation) {
  const auto e = P("a*sin(u1)*exp(u2) / (2 + cos(u1*u2)) - u2^3");
  const Params params = {{"a", 1.7}};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const std::array<double, 2> u = {d(rng), d(rng)};
    const std::array<Jet, 2> j = {Jet::variable(0, u[0], 2), Jet::variable(1, u[1], 2)};
    EXPECT_NEAR(evaluate(*e, std::span<const Jet>(j), params).value(), evaluate(*e, u, params), 1e-14);
  }
}

TEST(Expr, FormatRealIsShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 2.0}) EXPECT_EQ(std::stod(format_real(v)), v);
  EXPECT_EQ(format_real(0.1), "0.1");
}
