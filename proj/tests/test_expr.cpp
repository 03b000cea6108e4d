#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"
#include "geomech/parser.hpp"
#include "oracles.hpp"

using namespace geomech;

namespace {

double ev(const std::string& text, std::size_t n, std::vector<double> x, std::vector<double> v = {}) {
  return parse(text, n).eval(x, v);
}

}  // namespace

TEST(Parse, SumOfSquares) {
  const Expr e = parse("x1^2 + x2^2", 2);
  EXPECT_DOUBLE_EQ(e.eval(std::vector<double>{3.0, 4.0}), 25.0);
}

TEST(Parse, KineticEnergyLiteral) {
  EXPECT_DOUBLE_EQ(ev("0.5*(v1^2+v2^2)", 2, {0, 0}, {3, 4}), 12.5);
}

TEST(Parse, IndexOutOfRange) {
  EXPECT_THROW(parse("x3", 2), ParseError);
  EXPECT_THROW(parse("v0", 2), ParseError);
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse("", 1), ParseError);
  EXPECT_THROW(parse("   ", 1), ParseError);
  EXPECT_THROW(parse("x1 +", 1), ParseError);
  EXPECT_THROW(parse("(x1", 1), ParseError);
  EXPECT_THROW(parse("foo(x1)", 1), ParseError);
  EXPECT_THROW(parse("y1", 1), ParseError);
  EXPECT_THROW(parse("sin(x1, x1)", 1), ParseError);
  EXPECT_THROW(parse("atan2(x1)", 1), ParseError);
  EXPECT_THROW(parse("x1 x1", 1), ParseError);
  EXPECT_THROW(parse("2 $ 3", 1), ParseError);
  EXPECT_THROW(parse("x1", 0), PreconditionError);
}

TEST(Parse, ErrorCarriesOffset) {
  try {
    parse("x1 + $", 1);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  try {
    parse("x1 + x7", 2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
}

TEST(Parse, Precedence) {
  EXPECT_DOUBLE_EQ(ev("-x1^2", 1, {3}), -9.0);
  EXPECT_DOUBLE_EQ(ev("2^3^2", 1, {0}), 512.0);
  EXPECT_DOUBLE_EQ(ev("2^-1", 1, {0}), 0.5);
  EXPECT_DOUBLE_EQ(ev("1 - 2 - 3", 1, {0}), -4.0);
  EXPECT_DOUBLE_EQ(ev("8 / 4 / 2", 1, {0}), 1.0);
  EXPECT_DOUBLE_EQ(ev("1 + 2 * 3", 1, {0}), 7.0);
  EXPECT_DOUBLE_EQ(ev("-2 * -3", 1, {0}), 6.0);
  EXPECT_DOUBLE_EQ(ev("(1 + 2) * 3", 1, {0}), 9.0);
  EXPECT_DOUBLE_EQ(ev("1.5e1 + 2E-1", 1, {0}), 15.2);
  EXPECT_DOUBLE_EQ(ev(".5", 1, {0}), 0.5);
}

TEST(Parse, Functions) {
  EXPECT_NEAR(ev("sin(x1)^2 + cos(x1)^2", 1, {0.7}), 1.0, 1e-15);
  EXPECT_NEAR(ev("exp(log(x1))", 1, {2.5}), 2.5, 1e-15);
  EXPECT_NEAR(ev("sqrt(x1)", 1, {2.25}), 1.5, 1e-15);
  EXPECT_NEAR(ev("atan2(x2, x1)", 2, {-1.0, 0.0}), M_PI, 1e-15);
}

TEST(Eval, ProductOfCoordAndVelocity) {
  EXPECT_DOUBLE_EQ(ev("x1*v2", 2, {2, 0}, {0, 3}), 6.0);
}

TEST(Eval, LiteralFold) {
  const Expr e = parse("2*3 + sin(0) - 4/2", 3);
  ASSERT_TRUE(e.is_number());
  EXPECT_DOUBLE_EQ(e.number(), 4.0);
  for (const auto& s : oracle::random_states(3, 10, 5)) EXPECT_DOUBLE_EQ(eval_at(e, s), 4.0);
}

TEST(Eval, DomainErrors) {
  EXPECT_THROW(ev("log(x1)", 1, {-1}), DomainError);
  EXPECT_THROW(ev("log(x1)", 1, {0}), DomainError);
  EXPECT_THROW(ev("sqrt(x1)", 1, {-0.5}), DomainError);
  EXPECT_THROW(ev("1/x1", 1, {0}), DomainError);
  EXPECT_THROW(ev("x1^0.5", 1, {-2}), DomainError);
  EXPECT_THROW(ev("exp(x1)", 1, {1000}), OverflowError);
  // Literal folding never hides a domain error.
  EXPECT_THROW(parse("log(-1)", 1).eval(std::vector<double>{0}), DomainError);
}

TEST(Eval, ShortStateIsAnError) {
  EXPECT_THROW(parse("x2", 2).eval(std::vector<double>{1.0}), PreconditionError);
}

TEST(Eval, Deterministic) {
  oracle::ExprGen gen(3, 11);
  for (int k = 0; k < 20; ++k) {
    const Expr e = parse(gen.make(4), 3);
    for (const auto& s : oracle::random_states(3, 5, 100 + k)) {
      const double a = eval_at(e, s);
      const double b = eval_at(e, s);
      EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
    }
  }
}

TEST(Diff, PowerRule) {
  const Expr d = diff(parse("x1^2+x2^2", 2), Symbol::x(0));
  for (const auto& s : oracle::random_states(2, 10, 3)) EXPECT_NEAR(eval_at(d, s), 2 * s.x[0], 1e-14);
}

TEST(Diff, ConstantIsZero) {
  EXPECT_TRUE(diff(parse("3.5", 1), Symbol::x(0)).is_zero());
  EXPECT_TRUE(diff(parse("v1*x1", 2), Symbol::x(1)).is_zero());
}

TEST(Diff, AgainstCentralDifferences) {
  oracle::ExprGen gen(3, 2024);
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    const Expr e = parse(gen.make(4), 3);
    for (const auto& s : oracle::random_states(3, 5, 7 * k + 1)) {
      for (std::size_t j = 0; j < 3; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double fx = oracle::central_x([&](const State& t) { return eval_at(e, t); }, s, jj);
        const double fv = oracle::central_v([&](const State& t) { return eval_at(e, t); }, s, jj);
        const double dx = eval_at(diff(e, Symbol::x(j)), s);
        const double dv = eval_at(diff(e, Symbol::v(j)), s);
        EXPECT_LT(std::abs(dx - fx), 1e-6 * (1 + std::abs(dx))) << to_string(e);
        EXPECT_LT(std::abs(dv - fv), 1e-6 * (1 + std::abs(dv))) << to_string(e);
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 300);
}

TEST(Diff, Atan2AwayFromOrigin) {
  const Expr e = parse("atan2(x2, x1)", 2);
  const Expr d1 = diff(e, Symbol::x(0));
  const Expr d2 = diff(e, Symbol::x(1));
  const std::vector<double> x{1.2, -0.7};
  const double r2 = x[0] * x[0] + x[1] * x[1];
  EXPECT_NEAR(d1.eval(x), -x[1] / r2, 1e-15);
  EXPECT_NEAR(d2.eval(x), x[0] / r2, 1e-15);
}

TEST(Diff, VariableExponent) {
  const Expr e = parse("x1^x2", 2);
  const std::vector<double> x{1.7, 0.6};
  EXPECT_NEAR(diff(e, Symbol::x(1)).eval(x), std::pow(1.7, 0.6) * std::log(1.7), 1e-14);
  EXPECT_NEAR(diff(e, Symbol::x(0)).eval(x), 0.6 * std::pow(1.7, -0.4), 1e-14);
}

// Differentiation closure: printed derivatives re-parse to eval-equal trees.
TEST(Property, DiffClosureReparses) {
  oracle::ExprGen gen(2, 77);
  for (int k = 0; k < 10; ++k) {
    const Expr e = parse(gen.make(3), 2);
    const Expr d = diff(e, Symbol::x(k % 2));
    const Expr back = parse(to_string(d), 2);
    for (const auto& s : oracle::random_states(2, 10, 900 + k))
      EXPECT_LE(oracle::rel_err(eval_at(back, s), eval_at(d, s)), 1e-12) << to_string(d);
  }
}

TEST(Property, DiffLinearity) {
  oracle::ExprGen gen(3, 99);
  for (int k = 0; k < 20; ++k) {
    const Expr e1 = parse(gen.make(3), 3);
    const Expr e2 = parse(gen.make(3), 3);
    const double a = 0.3 + 0.1 * k;
    const Symbol s_var = k % 2 ? Symbol::x(k % 3) : Symbol::v(k % 3);
    const Expr lhs = diff(Expr(a) * e1 + e2, s_var);
    const Expr d1 = diff(e1, s_var);
    const Expr d2 = diff(e2, s_var);
    for (const auto& s : oracle::random_states(3, 5, 300 + k)) {
      const double want = a * eval_at(d1, s) + eval_at(d2, s);
      EXPECT_LE(oracle::rel_err(eval_at(lhs, s), want), 1e-12);
    }
  }
}

TEST(Property, PrintParseRoundtrip) {
  oracle::ExprGen gen(3, 5);
  for (int k = 0; k < 50; ++k) {
    const std::string text = gen.make(4);
    const Expr e = parse(text, 3);
    const Expr back = parse(to_string(e), 3);
    for (const auto& s : oracle::random_states(3, 4, k)) EXPECT_EQ(eval_at(back, s), eval_at(e, s)) << text;
  }
  // Negative literals, nested minus and exponent forms survive printing.
  for (const char* text : {"-x1^2", "(-x1)^2", "x1 - (x2 - x3)", "x1/(x2*x3)", "2^-x1", "1e-7*x1", "-(-x1)"}) {
    const Expr e = parse(text, 3);
    const Expr back = parse(to_string(e), 3);
    for (const auto& s : oracle::random_states(3, 4, 1, 0.5, 1.5)) EXPECT_EQ(eval_at(back, s), eval_at(e, s)) << text;
  }
}

TEST(Property, SymbolBound) {
  EXPECT_EQ(parse("x1 + v3", 3).symbol_bound(), 3u);
  EXPECT_TRUE(parse("x1 + v3", 3).depends_on_velocity());
  EXPECT_FALSE(parse("x3", 3).depends_on_velocity());
}
