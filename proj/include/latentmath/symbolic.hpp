#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latentmath/expr.hpp"

namespace latentmath {

// The six atomic operators. Integer ids are stable (used by the one-hot
// operation encoding and the dataset files).
enum class OpKind : int {
  addition = 0,
  subtraction = 1,
  multiplication = 2,
  division = 3,
  differentiation = 4,
  integration = 5,
};

inline constexpr int kNumOps = 6;

const char* op_name(OpKind op);
std::optional<OpKind> op_from_name(const std::string& name);

// Variables eligible as the second argument of an operation.
struct OperandSet {
  std::vector<std::string> variables;
};

struct Conclusion {
  std::string operand;
  Expr result;
};

struct ConclusionSet {
  OpKind operation;
  std::vector<Conclusion> conclusions;  // canonical, deduplicated, operand order preserved
};

// Total symbolic derivative: linearity, product rule, power rule and chain
// rule over cos/sin/log/exp. Exponents containing the variable fall back to
// the log-derivative form b^e (e' log b + e b'/b).
Expr differentiate(const Expr& e, const std::string& v);

// Rule-based antiderivative (constant of integration omitted):
//   R1  v-free e            -> e*v
//   R2  sums                -> termwise
//   R3  v-free coefficients -> factored out
//   R4  v^n, n != -1        -> v^(n+1)/(n+1)
//   R5  v^-1                -> log(v)
//   R6  cos(v)/sin(v)/exp(v)-> sin(v)/-cos(v)/exp(v)
// Returns nullopt when no rule applies.
std::optional<Expr> try_integrate(const Expr& e, const std::string& v);

// Same as try_integrate but throws NotIntegrable.
Expr integrate(const Expr& e, const std::string& v);

// y = t(x, v). Throws NotIntegrable for integration failures; the four
// arithmetic operators and differentiation are total.
Expr apply_operation(const Expr& e, OpKind op, const std::string& v);
std::optional<Expr> try_apply_operation(const Expr& e, OpKind op, const std::string& v);

// Applies the operation across the operand set, dropping integration
// failures and canonical duplicates; operand order is preserved. Throws
// Error(invalid_argument) when every operand fails.
ConclusionSet enumerate_conclusions(const Expr& e, OpKind op, const OperandSet& operands);

}  // namespace latentmath
