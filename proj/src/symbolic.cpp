#include "latentmath/symbolic.hpp"

#include <unordered_set>

namespace latentmath {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::addition: return "addition";
    case OpKind::subtraction: return "subtraction";
    case OpKind::multiplication: return "multiplication";
    case OpKind::division: return "division";
    case OpKind::differentiation: return "differentiation";
    case OpKind::integration: return "integration";
  }
  return "?";
}

std::optional<OpKind> op_from_name(const std::string& name) {
  for (int i = 0; i < kNumOps; ++i)
    if (name == op_name(static_cast<OpKind>(i))) return static_cast<OpKind>(i);
  return std::nullopt;
}

namespace {

bool contains_symbol(const Expr& e, const std::string& v) {
  if (e->kind() == ExprKind::symbol) return e->name() == v;
  for (const auto& a : e->args())
    if (contains_symbol(a, v)) return true;
  return false;
}

}  // namespace

Expr differentiate(const Expr& e, const std::string& v) {
  switch (e->kind()) {
    case ExprKind::constant: return make_int(0);
    case ExprKind::symbol: return e->name() == v ? make_int(1) : make_int(0);
    case ExprKind::sum: {
      std::vector<Expr> terms;
      terms.reserve(e->args().size());
      for (const auto& a : e->args()) terms.push_back(differentiate(a, v));
      return make_sum(std::move(terms));
    }
    case ExprKind::product: {
      // sum over factors of (factor' * rest)
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e->args().size(); ++i) {
        if (!contains_symbol(e->args()[i], v)) continue;
        std::vector<Expr> factors;
        factors.push_back(differentiate(e->args()[i], v));
        for (std::size_t j = 0; j < e->args().size(); ++j)
          if (j != i) factors.push_back(e->args()[j]);
        terms.push_back(make_product(std::move(factors)));
      }
      return make_sum(std::move(terms));
    }
    case ExprKind::power: {
      const Expr& b = e->base();
      const Expr& x = e->exponent();
      if (!contains_symbol(e, v)) return make_int(0);
      if (!contains_symbol(x, v)) {
        // n * b^(n-1) * b'
        Expr n_minus_1 = make_sum({x, make_int(-1)});
        return make_product({x, make_power(b, n_minus_1), differentiate(b, v)});
      }
      // general case via b^e * (e' log b + e b'/b)
      Expr term1 = make_product({differentiate(x, v), make_function(FuncKind::log, b)});
      Expr term2 = make_product({x, differentiate(b, v), make_power(b, make_int(-1))});
      return make_product({e, make_sum({term1, term2})});
    }
    case ExprKind::function: {
      Expr inner = differentiate(e->arg(), v);
      if (is_zero(inner)) return make_int(0);
      Expr outer;
      switch (e->func()) {
        case FuncKind::cos:
          outer = neg(make_function(FuncKind::sin, e->arg()));
          break;
        case FuncKind::sin:
          outer = make_function(FuncKind::cos, e->arg());
          break;
        case FuncKind::exp:
          outer = e;
          break;
        case FuncKind::log:
          outer = make_power(e->arg(), make_int(-1));
          break;
      }
      return make_product({outer, inner});
    }
  }
  return make_int(0);
}

namespace {

// single non-sum item with v-free coefficients already factored out
std::optional<Expr> integrate_atom(const Expr& e, const std::string& v) {
  // R4/R5: v^n
  if (e->kind() == ExprKind::symbol && e->name() == v) {
    // v -> v^2 / 2
    return make_product({make_rat(1, 2), make_power(e, make_int(2))});
  }
  if (e->kind() == ExprKind::power && e->base()->kind() == ExprKind::symbol &&
      e->base()->name() == v && e->exponent()->kind() == ExprKind::constant) {
    const Rat& n = e->exponent()->value();
    if (n == Rat(-1)) return make_function(FuncKind::log, e->base());  // R5
    Rat n1 = n + Rat(1);
    Rat inv;
    if (!rat_invert(n1, &inv)) return std::nullopt;
    return make_product({make_constant(inv), make_power(e->base(), make_constant(n1))});
  }
  // R6: direct elementary forms with the bare variable as argument
  if (e->kind() == ExprKind::function && e->arg()->kind() == ExprKind::symbol &&
      e->arg()->name() == v) {
    switch (e->func()) {
      case FuncKind::cos: return make_function(FuncKind::sin, e->arg());
      case FuncKind::sin: return neg(make_function(FuncKind::cos, e->arg()));
      case FuncKind::exp: return e;
      case FuncKind::log: return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Expr> try_integrate(const Expr& e, const std::string& v) {
  // R2 first: sums integrate termwise even when v-free, so the result keeps
  // the distributed shape of the derivation corpus (u*r + r*cos(...), not
  // r*(u + cos(...)))
  if (e->kind() == ExprKind::sum) {
    std::vector<Expr> terms;
    terms.reserve(e->args().size());
    for (const auto& a : e->args()) {
      auto t = try_integrate(a, v);
      if (!t) return std::nullopt;
      terms.push_back(std::move(*t));
    }
    return make_sum(std::move(terms));
  }

  // R1: constant in v
  if (!contains_symbol(e, v)) return make_product({e, make_symbol(v)});

  // R3: factor v-free coefficients out of products
  if (e->kind() == ExprKind::product) {
    std::vector<Expr> coeff, dependent;
    for (const auto& a : e->args()) {
      if (contains_symbol(a, v))
        dependent.push_back(a);
      else
        coeff.push_back(a);
    }
    if (dependent.size() != 1) return std::nullopt;  // x*cos(x) and friends: no rule
    auto inner = integrate_atom(dependent[0], v);
    if (!inner) return std::nullopt;
    coeff.push_back(std::move(*inner));
    return make_product(std::move(coeff));
  }

  return integrate_atom(e, v);
}

Expr integrate(const Expr& e, const std::string& v) {
  auto r = try_integrate(e, v);
  if (!r) throw NotIntegrable("no integration rule applies for d" + v);
  return *r;
}

std::optional<Expr> try_apply_operation(const Expr& e, OpKind op, const std::string& v) {
  Expr operand = make_symbol(v);
  switch (op) {
    case OpKind::addition: return add(e, operand);
    case OpKind::subtraction: return sub(e, operand);
    case OpKind::multiplication: return mul(e, operand);
    case OpKind::division: return div(e, operand);
    case OpKind::differentiation: return differentiate(e, v);
    case OpKind::integration: return try_integrate(e, v);
  }
  return std::nullopt;
}

Expr apply_operation(const Expr& e, OpKind op, const std::string& v) {
  auto r = try_apply_operation(e, op, v);
  if (!r) throw NotIntegrable("no integration rule applies for d" + v);
  return *r;
}

ConclusionSet enumerate_conclusions(const Expr& e, OpKind op, const OperandSet& operands) {
  ConclusionSet out{op, {}};
  std::unordered_set<Expr, ExprHash, ExprEq> seen;
  for (const auto& v : operands.variables) {
    auto r = try_apply_operation(e, op, v);
    if (!r) continue;
    if (!seen.insert(*r).second) continue;
    out.conclusions.push_back({v, std::move(*r)});
  }
  if (out.conclusions.empty())
    throw Error(ErrorCode::invalid_argument,
                std::string("empty conclusion set: every operand failed for ") + op_name(op));
  return out;
}

}  // namespace latentmath
