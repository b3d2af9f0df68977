#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latentmath/expr.hpp"
#include "latentmath/rng.hpp"
#include "testutil.hpp"

using namespace latentmath;

namespace {

// u + cos(log(-x + o)) assembled by hand
Expr appendix_premise(const std::string& inner = "x") {
  Expr neg_x = neg(make_symbol(inner));
  Expr s = add(neg_x, make_symbol("o"));
  return add(make_symbol("u"), make_function(FuncKind::cos, make_function(FuncKind::log, s)));
}

}  // namespace

TEST_CASE("parse of the appendix premise round-trips canonically") {
  const std::string text =
      "Add(Symbol('u'), cos(log(Add(Mul(Integer(-1), Symbol('x')), Symbol('o')))))";
  Expr e = parse_functional(text);
  CHECK(serialize_functional(e) == text);
  CHECK(expr_equal(e, appendix_premise()));
}

TEST_CASE("trivial parses") {
  CHECK(serialize_functional(parse_functional("Symbol('x')")) == "Symbol('x')");
  // canonicalization forced by like-term collection
  CHECK(serialize_functional(parse_functional("Add(Symbol('x'), Symbol('x'))")) ==
        "Mul(Integer(2), Symbol('x'))");
  CHECK(serialize_functional(make_int(-3)) == "Integer(-3)");
  CHECK(serialize_functional(make_rat(1, 2)) == "Rational(1, 2)");
}

TEST_CASE("parse accepts optional whitespace and rejects malformed input") {
  Expr a = parse_functional("Add(Symbol('x'),Symbol('y'))");
  Expr b = parse_functional("Add(Symbol('x'),   Symbol('y'))");
  CHECK(expr_equal(a, b));

  CHECK_THROWS_AS(parse_functional("Madd(Symbol('x'))"), ParseError);
  CHECK_THROWS_AS(parse_functional("Add(Symbol('x'))"), ParseError);   // arity
  CHECK_THROWS_AS(parse_functional("Symbol('x') junk"), ParseError);   // trailing
  CHECK_THROWS_AS(parse_functional("Rational(1, 0)"), ParseError);
  CHECK_THROWS_AS(parse_functional("Pow(Symbol('x')"), ParseError);

  try {
    parse_functional("Add(Symbol('x'), Wat(1))");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset() == 17);
  }
}

TEST_CASE("rational constants normalize") {
  CHECK(serialize_functional(parse_functional("Rational(2, 4)")) == "Rational(1, 2)");
  CHECK(serialize_functional(parse_functional("Rational(3, 1)")) == "Integer(3)");
  CHECK(serialize_functional(parse_functional("Rational(1, -2)")) == "Rational(-1, 2)");
}

TEST_CASE("appendix integration result serializes with canonical argument order") {
  // u*r + r*cos(log(-x + o))
  Expr r = make_symbol("r");
  Expr e = add(mul(make_symbol("u"), r),
               mul(r, make_function(FuncKind::cos,
                                    make_function(FuncKind::log,
                                                  add(neg(make_symbol("x")), make_symbol("o"))))));
  CHECK(serialize_functional(e) ==
        "Add(Mul(Symbol('r'), Symbol('u')), "
        "Mul(Symbol('r'), cos(log(Add(Mul(Integer(-1), Symbol('x')), Symbol('o'))))))");
}

TEST_CASE("latex rendering matches the corpus style") {
  CHECK(serialize_latex(appendix_premise()) == "u + \\cos{(\\log{(- x + o)})}");
  Expr half_u2 = make_product({make_rat(1, 2), make_power(make_symbol("u"), make_int(2))});
  CHECK(serialize_latex(half_u2) == "\\frac{u^{2}}{2}");
  CHECK(serialize_latex(neg(make_symbol("z"))) == "- z");
  CHECK(serialize_latex(make_int(-3)) == "-3");
  Expr q = div(make_symbol("x"), make_symbol("y"));
  CHECK(serialize_latex(q) == "\\frac{x}{y}");
  Expr two_u = mul(make_int(2), make_symbol("u"));
  CHECK(serialize_latex(two_u) == "2 u");
  CHECK(serialize_latex(div(make_int(1), make_symbol("x"))) == "\\frac{1}{x}");
  CHECK(serialize_latex(mul(make_int(2), add(make_symbol("x"), make_symbol("y")))) ==
        "2 (x + y)");
  CHECK(serialize_latex(make_power(add(make_symbol("x"), make_symbol("y")), make_int(2))) ==
        "(x + y)^{2}");
}

TEST_CASE("simplify collects like terms per the running example") {
  // u + u + cos(log(-z + o)) -> 2u + cos(log(-z + o))
  Expr inner = add(neg(make_symbol("z")), make_symbol("o"));
  Expr c = make_function(FuncKind::cos, make_function(FuncKind::log, inner));
  Expr e = make_sum({make_symbol("u"), make_symbol("u"), c});
  Expr expected = add(mul(make_int(2), make_symbol("u")), c);
  CHECK(expr_equal(e, expected));
  CHECK(serialize_latex(e) == "2 u + \\cos{(\\log{(- z + o)})}");

  CHECK(serialize_functional(mul(make_symbol("x"), make_symbol("x"))) ==
        "Pow(Symbol('x'), Integer(2))");
}

TEST_CASE("identity rewrites") {
  Expr x = make_symbol("x");
  CHECK(expr_equal(make_power(x, make_int(1)), x));
  CHECK(expr_equal(make_power(x, make_int(0)), make_int(1)));
  CHECK(expr_equal(make_product({make_int(0), x}), make_int(0)));
  CHECK(expr_equal(make_sum({x, make_int(0)}), x));
  CHECK(expr_equal(make_product({x, make_int(1)}), x));
  CHECK(expr_equal(make_product({x, make_power(x, make_int(-1))}), make_int(1)));
  CHECK(expr_equal(make_power(make_int(2), make_int(3)), make_int(8)));
  CHECK(expr_equal(make_power(make_int(2), make_int(-1)), make_rat(1, 2)));
}

TEST_CASE("free_symbols") {
  auto fs = free_symbols(appendix_premise());
  CHECK(fs == std::set<std::string>{"u", "x", "o"});
  CHECK(free_symbols(make_int(5)).empty());
  CHECK(free_symbols(make_symbol("x")) == std::set<std::string>{"x"});
}

TEST_CASE("evaluate_numeric") {
  Expr e = add(make_symbol("x"), make_symbol("y"));
  CHECK(evaluate_numeric(e, {{"x", 1.0}, {"y", 2.0}}) == doctest::Approx(3.0));

  Expr c = make_function(FuncKind::cos, make_function(FuncKind::log, make_int(1)));
  CHECK(evaluate_numeric(c, {}) == doctest::Approx(1.0));

  CHECK(evaluate_numeric(appendix_premise(), {{"u", 0.5}, {"x", 1.0}, {"o", 2.0}}) ==
        doctest::Approx(1.5));

  CHECK_THROWS_AS(evaluate_numeric(make_symbol("q"), {}), MissingSymbol);
  CHECK_THROWS_AS(
      evaluate_numeric(make_function(FuncKind::log, make_symbol("x")), {{"x", -1.0}}),
      DomainError);
  CHECK_THROWS_AS(
      evaluate_numeric(div(make_int(1), make_symbol("x")), {{"x", 0.0}}), DomainError);
}

TEST_CASE("canonical uniqueness under commutative shuffles") {
  Rng rng(20240801);
  for (int trial = 0; trial < 10000; ++trial) {
    Expr e = testutil::random_expr(rng, 3);
    Expr shuffled = testutil::shuffled_rebuild(e, rng);
    REQUIRE(serialize_functional(e) == serialize_functional(shuffled));
  }
}

TEST_CASE("round-trip and idempotence on random canonical expressions") {
  Rng rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    Expr e = testutil::random_expr(rng, 3);
    Expr back = parse_functional(serialize_functional(e));
    REQUIRE(expr_equal(back, e));
    REQUIRE(expr_equal(simplify(e), e));
  }
}

TEST_CASE("numeric soundness of canonicalization") {
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Expr e = testutil::random_expr(rng, 3);
    Expr shuffled = testutil::shuffled_rebuild(e, rng);
    for (int rep = 0; rep < 10; ++rep) {
      std::map<std::string, double> assignment;
      for (const auto& name : free_symbols(e))
        assignment[name] = rng.uniform_real(0.2, 3.0);
      try {
        double a = evaluate_numeric(e, assignment);
        double b = evaluate_numeric(shuffled, assignment);
        if (!std::isfinite(a)) continue;
        REQUIRE(std::abs(a - b) <= 1e-8 * (1.0 + std::abs(a)));
        ++checked;
      } catch (const DomainError&) {
        // point outside the domain; try another draw
      }
    }
  }
  CHECK(checked > 2000);
}
