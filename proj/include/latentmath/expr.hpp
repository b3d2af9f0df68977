#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "latentmath/error.hpp"

namespace latentmath {

// Exact rational with int64 parts, always gcd-reduced with den >= 1.
// den == 1 means the value is an integer.
struct Rat {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rat() = default;
  Rat(std::int64_t n) : num(n), den(1) {}  // NOLINT: implicit by design
  Rat(std::int64_t n, std::int64_t d);

  bool is_integer() const { return den == 1; }
  bool is_zero() const { return num == 0; }
  bool is_one() const { return num == 1 && den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rat operator+(const Rat& a, const Rat& b);
  friend Rat operator-(const Rat& a, const Rat& b);
  friend Rat operator*(const Rat& a, const Rat& b);
  friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b);
};

// Reciprocal; fails (returns false) on zero.
bool rat_invert(const Rat& a, Rat* out);
// a^n for integer n; fails on 0^negative or overflow.
bool rat_pow(const Rat& a, std::int64_t n, Rat* out);

enum class ExprKind : std::uint8_t { constant, symbol, function, power, product, sum };
enum class FuncKind : std::uint8_t { cos, sin, log, exp };

const char* func_name(FuncKind f);

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// Immutable AST node. Instances are only created through the smart
// constructors below, which enforce the canonical form:
//   - Sum/Product flattened, arguments sorted by expr_compare, >= 2 args
//   - at most one constant argument per Sum/Product (folded, placed first)
//   - no 0 term in Sum, no 1 factor in Product, 0 annihilates Product
//   - like terms collected in Sum, equal bases merged into Power in Product
//   - x^1 -> x, x^0 -> 1, constant^integer folded
//   - negation is Product(Integer(-1), ...)
//   - rationals reduced, integer-valued rationals are integer constants
class ExprNode {
 public:
  ExprKind kind() const { return kind_; }
  const Rat& value() const { return value_; }            // constant
  const std::string& name() const { return name_; }      // symbol
  FuncKind func() const { return func_; }                // function
  const std::vector<Expr>& args() const { return args_; }
  const Expr& base() const { return args_[0]; }          // power
  const Expr& exponent() const { return args_[1]; }      // power
  const Expr& arg() const { return args_[0]; }           // function
  std::size_t hash() const { return hash_; }

 private:
  ExprNode() = default;
  friend class ExprBuilder;

  ExprKind kind_ = ExprKind::constant;
  FuncKind func_ = FuncKind::cos;
  Rat value_;
  std::string name_;
  std::vector<Expr> args_;
  std::size_t hash_ = 0;
};

// --- smart constructors -----------------------------------------------------

Expr make_int(std::int64_t v);
Expr make_rat(std::int64_t num, std::int64_t den);
Expr make_constant(const Rat& r);
Expr make_symbol(const std::string& name);
Expr make_function(FuncKind f, Expr arg);
Expr make_power(Expr base, Expr exponent);
Expr make_sum(std::vector<Expr> args);
Expr make_product(std::vector<Expr> args);

// Conveniences built on the canonical constructors.
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);

inline bool is_constant(const Expr& e, std::int64_t v) {
  return e->kind() == ExprKind::constant && e->value() == Rat(v);
}
inline bool is_zero(const Expr& e) { return is_constant(e, 0); }
inline bool is_one(const Expr& e) { return is_constant(e, 1); }

// --- ordering / equality ----------------------------------------------------

// Total order on canonical nodes. Constants sort first (by value); all other
// nodes compare as their factor lists (a non-product stands for the singleton
// list of itself), extended lexicographically; within a kind: symbols by
// name, functions by name then argument, powers by base then exponent, sums
// elementwise then by length.
int expr_compare(const Expr& a, const Expr& b);
bool expr_equal(const Expr& a, const Expr& b);

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e->hash(); }
};
struct ExprEq {
  bool operator()(const Expr& a, const Expr& b) const { return expr_equal(a, b); }
};
struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return expr_compare(a, b) < 0; }
};

// --- operations ---------------------------------------------------------------

// Parses the functional serialization (Add/Mul/Pow/cos/sin/log/exp/Symbol/
// Integer/Rational) and returns the canonical AST. Throws ParseError with the
// byte offset of the first offending character.
Expr parse_functional(const std::string& text);

std::string serialize_functional(const Expr& e);
std::string serialize_latex(const Expr& e);

// Canonicalizing rebuild. Every Expr produced by this library is already
// canonical, so this is the identity on them; it exists for inputs assembled
// elsewhere and as an explicit idempotence witness.
Expr simplify(const Expr& e);

std::set<std::string> free_symbols(const Expr& e);

// IEEE double evaluation. Throws MissingSymbol for unbound symbols and
// DomainError for log of a non-positive value or a zero denominator.
double evaluate_numeric(const Expr& e, const std::map<std::string, double>& assignment);

// Simultaneous substitution of symbols; result is canonical.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements);

std::size_t count_nodes(const Expr& e);

// Ordered list of variable names plus the inclusive constant range used by
// premise randomisation; constants stay within {2..9}.
struct Vocabulary {
  std::vector<std::string> names;
  int const_min = 2;
  int const_max = 9;
};

}  // namespace latentmath
