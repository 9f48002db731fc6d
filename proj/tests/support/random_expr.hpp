#pragma once

#include <random>

#include "mstat/expr.hpp"

namespace mstat::testing {

/// Random polynomial tree over `vars` variables with depth at most `depth`.
/// Leaves are small integer constants or variables; inner nodes are
/// add/sub/mul, negation, or an integer power up to 3.
inline Expr random_polynomial(std::mt19937_64& rng, std::size_t n, std::size_t m, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  const std::size_t vars = n + m;
  auto leaf = [&]() {
    if (vars == 0 || pick(rng) < 3) {
      std::uniform_int_distribution<long> c(-3, 3);
      return Expr::constant(c(rng));
    }
    std::uniform_int_distribution<std::size_t> v(0, vars - 1);
    std::size_t idx = v(rng);
    return Expr::variable(idx, variable_name(idx, n));
  };
  if (depth <= 1) return leaf();
  const int choice = pick(rng);
  if (choice < 2) return leaf();
  if (choice < 4) return random_polynomial(rng, n, m, depth - 1) + random_polynomial(rng, n, m, depth - 1);
  if (choice < 5) return random_polynomial(rng, n, m, depth - 1) - random_polynomial(rng, n, m, depth - 1);
  if (choice < 8) return random_polynomial(rng, n, m, depth - 1) * random_polynomial(rng, n, m, depth - 1);
  if (choice < 9) return -random_polynomial(rng, n, m, depth - 1);
  std::uniform_int_distribution<unsigned> e(2, 3);
  return Expr::power(random_polynomial(rng, n, m, depth - 1), e(rng));
}

/// Random smooth (non-polynomial) tree: polynomial leaves wrapped in
/// sin/cos/exp at random.
inline Expr random_smooth(std::mt19937_64& rng, std::size_t n, std::size_t m, int depth) {
  std::uniform_int_distribution<int> pick(0, 5);
  Expr base = random_polynomial(rng, n, m, depth);
  switch (pick(rng)) {
    case 0:
      return Expr::unary(UnaryOp::Sin, base);
    case 1:
      return Expr::unary(UnaryOp::Cos, base) * random_polynomial(rng, n, m, 2);
    case 2:
      return Expr::unary(UnaryOp::Exp, Expr::constant(Rational(1, 4)) * base);
    default:
      return base;
  }
}

inline Vec random_point(std::mt19937_64& rng, std::size_t dim, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec p(dim);
  for (auto& v : p) v = u(rng);
  return p;
}

}  // namespace mstat::testing
