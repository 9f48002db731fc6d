#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/random_expr.hpp"
#include "mstat/errors.hpp"
#include "mstat/expr.hpp"

using namespace mstat;

namespace {

Expr var(std::size_t index, std::size_t n) { return Expr::variable(index, variable_name(index, n)); }

}  // namespace

TEST_CASE("parse builds the expected trees") {
  // n = 1, m = 2: x1 -> 0, y1 -> 1, y2 -> 2
  Expr e = parse("x1^2 + y1*y2", 1, 2);
  CHECK(e == Expr::power(var(0, 1), 2) + var(1, 1) * var(2, 1));

  CHECK(parse("sin(x1)", 1, 0) == Expr::unary(UnaryOp::Sin, var(0, 1)));
}

TEST_CASE("parse honours precedence and associativity") {
  const Expr x = var(0, 1), y = var(1, 1);
  CHECK(parse("-x1^2", 1, 1) == -Expr::power(x, 2));
  CHECK(parse("x1 - y1 - 1", 1, 1) == (x - y) - Expr::constant(1L));
  CHECK(parse("x1 / y1 * 2", 1, 1) == (x / y) * Expr::constant(2L));
  CHECK(parse("x1 + y1 * 2", 1, 1) == x + y * Expr::constant(2L));
  CHECK(parse("(x1 + y1) * 2", 1, 1) == (x + y) * Expr::constant(2L));
  CHECK(parse("2 * -x1", 1, 1) == Expr::constant(2L) * -x);
  CHECK(parse("0.25 * x1", 1, 1) == Expr::constant(Rational(1, 4)) * x);
  CHECK(parse("1e-2", 0, 0) == Expr::constant(Rational(1, 100)));
}

TEST_CASE("parse reports errors with offsets") {
  try {
    parse("x1 +", 1, 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(e.expected() == "operand");
    CHECK(e.found() == "end of input");
  }

  CHECK_THROWS_AS(parse("y3", 1, 2), ParseError);
  CHECK_THROWS_AS(parse("x0", 1, 2), ParseError);
  CHECK_THROWS_AS(parse("z1", 1, 2), ParseError);
  CHECK_THROWS_AS(parse("x1^-1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("x1^0.5", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("x1^2^2", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("sin x1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("(x1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("x1 x1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("", 1, 0), ParseError);
  CHECK_THROWS_AS(parse("abs(x1)", 1, 0), ParseError);

  try {
    parse("x1 + y3", 1, 2);
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
    CHECK(e.offset() <= std::string("x1 + y3").size());
  }
}

TEST_CASE("differentiate follows the table rules") {
  const std::size_t n = 1, m = 1;
  Expr s = parse("sin(x1)", n, m);
  CHECK(differentiate(s, 0) == Expr::unary(UnaryOp::Cos, var(0, n)));

  Expr p = parse("x1^2 * y1", n, m);
  CHECK(differentiate(p, 1) == Expr::power(var(0, n), 2));

  Expr cube = parse("x1^3", 1, 0);
  Vec at{2.0};
  Expr d = differentiate(cube, 0);
  CHECK(evaluate(d, at) == 12.0);
  CHECK(std::fabs(evaluate(d, at) - central_difference(cube, at, 0)) <= 1e-6);
}

TEST_CASE("evaluate") {
  CHECK(evaluate(Expr::constant(5L), Vec{1.0, 2.0}) == 5.0);
  CHECK(evaluate(parse("x1*y1", 1, 1), Vec{2.0, 3.0}) == 6.0);
  CHECK_THROWS_AS(evaluate(parse("1/x1", 1, 0), Vec{0.0}), DomainError);
  CHECK_THROWS_AS(evaluate(parse("exp(x1)", 1, 0), Vec{1000.0}), DomainError);
  // derivative of a quotient keeps the denominator, so its domain error survives
  CHECK_THROWS_AS(evaluate(differentiate(parse("y1/x1", 1, 1), 0), Vec{0.0, 1.0}), DomainError);
}

TEST_CASE("exact evaluation") {
  Expr e = parse("x1^2/3 - 1/7*y1", 1, 1);
  auto v = evaluate_exact(e, QVec{Rational(1, 2), Rational(2)});
  REQUIRE(v.has_value());
  CHECK(*v == Rational(1, 12) - Rational(2, 7));
  CHECK_FALSE(evaluate_exact(parse("sin(x1)", 1, 0), QVec{Rational(0)}).has_value());
  CHECK_THROWS_AS(evaluate_exact(parse("1/(x1-1)", 1, 0), QVec{Rational(1)}), DomainError);
}

TEST_CASE("constant folding") {
  CHECK(parse("2*3 + 1", 0, 0) == Expr::constant(7L));
  CHECK(parse("x1 * 0", 1, 0) == Expr::constant(0L));
  CHECK(parse("x1^1 + 0", 1, 0) == var(0, 1));
  CHECK(differentiate(Expr::constant(4L), 0) == Expr::constant(0L));
}

TEST_CASE("pretty-print round trip") {
  const char* samples[] = {"x1^2 + y1 * y2", "-x1^2", "(-x1)^2", "x1 - (y1 - y2)", "x1 / (y1 * y2)",
                           "-1/3 * x1",      "x1 * (-1/3)", "x1 - -3", "sin(x1 + y1)^2",
                           "exp(-y2) / (1 + x1^2)", "- -x1", "x1 * -(y1 + y2)"};
  for (const char* s : samples) {
    CAPTURE(s);
    Expr e = parse(s, 1, 2);
    std::string once = to_string(e);
    Expr again = parse(once, 1, 2);
    CHECK(again == e);
    CHECK(to_string(again) == once);
  }
}

TEST_CASE("property: printed random trees reparse identically") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Expr e = testing::random_smooth(rng, 2, 2, 5);
    std::string once = to_string(e);
    CAPTURE(once);
    Expr again = parse(once, 2, 2);
    CHECK(again == e);
    CHECK(to_string(again) == once);
  }
}

TEST_CASE("property: symbolic derivatives match central differences") {
  std::mt19937_64 rng(2026);
  const std::size_t n = 2, m = 2;
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    Expr e = testing::random_polynomial(rng, n, m, 5);
    Vec p = testing::random_point(rng, n + m);
    for (std::size_t v = 0; v < n + m; ++v) {
      double exact = evaluate(differentiate(e, v), p);
      double fd = central_difference(e, p, v);
      CAPTURE(to_string(e));
      CHECK(std::fabs(exact - fd) <= 1e-6 * std::max(1.0, std::fabs(fd)));
      ++checked;
    }
  }
  CHECK(checked == 400);
}

TEST_CASE("property: mixed second derivatives commute") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    Expr e = testing::random_smooth(rng, 1, 2, 4);
    Vec p = testing::random_point(rng, 3);
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = u + 1; v < 3; ++v) {
        double a = evaluate(differentiate(differentiate(e, u), v), p);
        double b = evaluate(differentiate(differentiate(e, v), u), p);
        CHECK(std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(a)));
      }
  }
}
