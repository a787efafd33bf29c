#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nvjac/expr.hpp"

using namespace nvjac;

TEST_CASE("arithmetic, precedence and variables") {
  CHECK(Expr::parse("1 + 2*3")(0, 0) == doctest::Approx(7));
  CHECK(Expr::parse("(1 + 2)*3")(0, 0) == doctest::Approx(9));
  CHECK(Expr::parse("2^3^2")(0, 0) == doctest::Approx(512));  // right associative
  CHECK(Expr::parse("-x + y")(1.5, 2.0) == doctest::Approx(0.5));
  CHECK(Expr::parse("x*x - y*y")(3, 2) == doctest::Approx(5));
}

TEST_CASE("functions and polar variables") {
  CHECK(Expr::parse("sin(pi/2)")(0, 0) == doctest::Approx(1));
  CHECK(Expr::parse("exp(x)")(1, 0) == doctest::Approx(std::exp(1.0)));
  CHECK(Expr::parse("r")(3, 4) == doctest::Approx(5));
  CHECK(Expr::parse("cos(theta)")(0, 2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(Expr::parse("cos(2*theta)")(1, 0) == doctest::Approx(1));
}

TEST_CASE("constants are recognized") {
  CHECK(Expr::parse("3 + 4").is_constant());
  CHECK_FALSE(Expr::parse("3 + x").is_constant());
  CHECK(Expr::constant(2.5)(7, 8) == doctest::Approx(2.5));
}

TEST_CASE("parse errors carry context") {
  CHECK_THROWS_AS(Expr::parse("1 + "), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("foo(3)"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x y"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("unknownvar"), std::invalid_argument);
}
