#include "dferr/test_function.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using dferr::ParseError;
using dferr::TestFunction;

TEST(TestFunction, ParsesArithmeticAndFunctions) {
  const auto f = TestFunction::parse("2*x0 - x1*x1 + sin(x0)*cos(x1) + exp(0) + sq(3)", 2);
  const std::vector<double> x = {0.5, -1.5};
  const double expected = 1.0 - 2.25 + std::sin(0.5) * std::cos(-1.5) + 1.0 + 9.0;
  EXPECT_DOUBLE_EQ(f(x), expected);
}

TEST(TestFunction, RespectsPrecedenceAndUnaryMinus) {
  const auto f = TestFunction::parse("-x0*x0 + 1 - -2", 1);
  EXPECT_DOUBLE_EQ(f(std::vector<double>{3.0}), -9.0 + 1.0 + 2.0);
  const auto g = TestFunction::parse("(1 + x0)*(1 - x0)", 1);
  EXPECT_DOUBLE_EQ(g(std::vector<double>{0.5}), 0.75);
}

TEST(TestFunction, ParsesScientificLiterals) {
  const auto f = TestFunction::parse("1.5e-3*x0 + .25", 1);
  EXPECT_DOUBLE_EQ(f(std::vector<double>{2.0}), 3e-3 + 0.25);
}

TEST(TestFunction, ParseErrorsReportPosition) {
  try {
    TestFunction::parse("x0 + ", 1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(TestFunction::parse("x2", 2), ParseError);
  EXPECT_THROW(TestFunction::parse("tan(x0)", 1), ParseError);
  EXPECT_THROW(TestFunction::parse("(x0", 1), ParseError);
  EXPECT_THROW(TestFunction::parse("x0 x0", 1), ParseError);
  EXPECT_THROW(TestFunction::parse("", 1), ParseError);
}

TEST(TestFunction, PrintedExpressionParsesBack) {
  const char* exprs[] = {"sin(x0)*x1 + sq(x0)", "exp(-0.5*x0)*cos(3*x1) - 1e-7", "-(x0 - x1)*(x0 + x1)"};
  const std::vector<double> x = {0.7, -0.3};
  for (const char* e : exprs) {
    const auto f = TestFunction::parse(e, 2);
    const auto g = TestFunction::parse(f.expression(), 2);
    EXPECT_EQ(f(x), g(x)) << e << " printed as " << f.expression();
  }
}

TEST(TestFunction, DefaultNameIsExpression) {
  const auto f = TestFunction::parse("cos(x0)", 1);
  EXPECT_EQ(f.name(), f.expression());
  EXPECT_EQ(f.named("c").name(), "c");
}

TEST(TestFunction, BoundsForBoundedAndUnboundedFunctions) {
  const auto s = TestFunction::parse("sin(x0)", 1);
  EXPECT_TRUE(s.in_cb2());
  EXPECT_DOUBLE_EQ(s.bounds().value, 1.0);
  const auto p = TestFunction::parse("x0*x0", 1);
  EXPECT_FALSE(p.in_cb2());
  const auto c = TestFunction::parse("sin(x0)*cos(x1)", 2);
  EXPECT_TRUE(c.in_cb2());
}

TEST(TestFunction, CompositionEvaluatesInnerFirst) {
  const auto outer = TestFunction::parse("x0*x1", 2);
  std::vector<TestFunction> inner = {TestFunction::parse("sin(x0)", 1), TestFunction::parse("x0 + 1", 1)};
  const auto f = outer.compose(inner);
  EXPECT_EQ(f.dimension(), 1);
  EXPECT_DOUBLE_EQ(f(std::vector<double>{0.4}), std::sin(0.4) * 1.4);
  std::vector<TestFunction> wrong = {TestFunction::parse("x0", 1)};
  EXPECT_THROW(outer.compose(wrong), std::invalid_argument);
}

TEST(TestFunction, PointDimensionIsChecked) {
  const auto f = TestFunction::parse("x0", 2);
  EXPECT_THROW(f(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(TestFunction::coordinate(2, 2), std::invalid_argument);
}

TEST(TestFunction, WindowIsOneInsideAndZeroOutside) {
  const auto f = TestFunction::parse("x0*x0", 1);
  const auto w = dferr::windowed(f, 0.0, 1.0, 0.1);
  EXPECT_TRUE(w.in_cb2());
  for (double x : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(w(std::vector<double>{x}), x * x);
  for (double x : {-0.1, -0.5, 1.1, 4.0}) EXPECT_EQ(w(std::vector<double>{x}), 0.0);
  const auto j = w.jet(std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(j.gradient()[0], 1.0);
  EXPECT_DOUBLE_EQ(j.hessian()(0, 0), 2.0);
  EXPECT_THROW(dferr::window(f, 1.0, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(dferr::window(f, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(TestFunction, ScannedBoundsCoverTheFunction) {
  const auto f = TestFunction::parse("sin(3*x0)", 1);
  const auto b = dferr::scan_bounds(f, 0.0, std::numbers::pi, 2001, 1.0);
  EXPECT_NEAR(b.value, 1.0, 1e-5);
  EXPECT_NEAR(b.gradient, 3.0, 1e-12);
  EXPECT_NEAR(b.hessian, 9.0, 1e-4);
}
