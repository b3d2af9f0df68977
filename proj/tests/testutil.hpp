#pragma once

#include <string>
#include <vector>

#include "latentmath/expr.hpp"
#include "latentmath/rng.hpp"

namespace latentmath::testutil {

// Random canonical expression, small enough for exact arithmetic.
inline Expr random_expr(Rng& rng, int depth = 3) {
  const std::vector<std::string> symbols = {"u", "x", "z", "o", "r", "w"};
  if (depth <= 0) {
    if (rng.bernoulli(0.7)) return make_symbol(symbols[rng.uniform(symbols.size())]);
    if (rng.bernoulli(0.5)) return make_int(rng.uniform_int(-9, 9));
    return make_rat(rng.uniform_int(1, 9), rng.uniform_int(2, 9));
  }
  switch (rng.uniform(6)) {
    case 0: {
      std::vector<Expr> args;
      int n = (int)rng.uniform_int(2, 4);
      for (int i = 0; i < n; ++i) args.push_back(random_expr(rng, depth - 1));
      return make_sum(std::move(args));
    }
    case 1: {
      std::vector<Expr> args;
      int n = (int)rng.uniform_int(2, 3);
      for (int i = 0; i < n; ++i) args.push_back(random_expr(rng, depth - 1));
      return make_product(std::move(args));
    }
    case 2: {
      Expr base = random_expr(rng, depth - 1);
      std::int64_t e = rng.bernoulli(0.25) ? -1 : rng.uniform_int(2, 4);
      return make_power(base, make_int(e));
    }
    case 3: {
      FuncKind f = static_cast<FuncKind>(rng.uniform(4));
      return make_function(f, random_expr(rng, depth - 1));
    }
    case 4: return make_symbol(symbols[rng.uniform(symbols.size())]);
    default: return make_int(rng.uniform_int(-9, 9));
  }
}

// Rebuilds e with commutative argument lists fed in shuffled order.
inline Expr shuffled_rebuild(const Expr& e, Rng& rng) {
  switch (e->kind()) {
    case ExprKind::constant:
    case ExprKind::symbol: return e;
    case ExprKind::function: return make_function(e->func(), shuffled_rebuild(e->arg(), rng));
    case ExprKind::power:
      return make_power(shuffled_rebuild(e->base(), rng), shuffled_rebuild(e->exponent(), rng));
    case ExprKind::sum:
    case ExprKind::product: {
      std::vector<Expr> args;
      for (const auto& a : e->args()) args.push_back(shuffled_rebuild(a, rng));
      rng.shuffle(args);
      return e->kind() == ExprKind::sum ? make_sum(std::move(args))
                                        : make_product(std::move(args));
    }
  }
  return e;
}

}  // namespace latentmath::testutil
