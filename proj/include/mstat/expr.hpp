#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mstat/numeric.hpp"

namespace mstat {

enum class UnaryOp { Neg, Sin, Cos, Exp };
enum class BinaryOp { Add, Sub, Mul, Div };

struct Node;

/// Immutable expression tree over the variables x1..xn, y1..ym.
///
/// Variables are stored by flat index (x_i -> i-1, y_j -> n+j-1), so a point
/// passed to evaluate() is the joint vector (x, y). Constants are exact
/// rationals. All builders fold constant subtrees and drop neutral elements
/// (x+0, 1*x, x^1, ...); no other rewriting is performed.
class Expr {
 public:
  Expr();  // the constant 0
  /// Empty handle, used only for unused child slots of a Node.
  explicit Expr(std::nullptr_t) {}

  static Expr constant(const Rational& value);
  static Expr constant(long value) { return constant(Rational(value)); }
  static Expr variable(std::size_t index, std::string name);
  static Expr unary(UnaryOp op, const Expr& arg);
  static Expr binary(BinaryOp op, const Expr& lhs, const Expr& rhs);
  static Expr power(const Expr& base, unsigned exponent);

  const Node& node() const { return *node_; }

  bool is_constant() const;
  bool is_constant(long value) const;

  /// True when the tree contains only rational arithmetic (no sin/cos/exp),
  /// i.e. evaluate_exact() can succeed.
  bool is_rational() const;

  /// Highest variable index referenced plus one (0 for constant trees).
  std::size_t arity() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  enum class Kind { Constant, Variable, Unary, Binary, Power };
  Kind kind;
  Rational value;          // Constant
  double value_d = 0.0;    // Constant, nearest double
  std::size_t index = 0;   // Variable
  std::string name;        // Variable
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  unsigned exponent = 0;   // Power
  Expr lhs{nullptr};       // Unary, Binary, Power
  Expr rhs{nullptr};       // Binary
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Name of the flat variable index for a problem with `n` upper-level
/// variables: x1..xn then y1..ym.
std::string variable_name(std::size_t index, std::size_t n);

/// Parses an arithmetic expression over x1..xn, y1..ym.
///
/// Grammar (highest binding first): integer power `^`, unary minus,
/// `*` `/`, `+` `-`; binary operators associate left. Functions: sin, cos,
/// exp. Exponents must be non-negative integer literals.
/// Throws ParseError on malformed input or an undeclared variable.
Expr parse(std::string_view text, std::size_t n, std::size_t m);

/// Canonical text form. parse(to_string(e)) reproduces `e` exactly.
std::string to_string(const Expr& e);

Expr differentiate(const Expr& e, std::size_t var);

/// Throws DomainError on division by zero or a non-finite result.
double evaluate(const Expr& e, std::span<const double> point);

/// Exact evaluation of a rational tree; std::nullopt if the tree uses
/// sin/cos/exp. Throws DomainError on division by zero.
std::optional<Rational> evaluate_exact(const Expr& e, std::span<const Rational> point);

/// Central difference with step cbrt(eps) * max(1, |x_var|).
struct FiniteDifferenceConfig {
  double relative_tolerance = 1e-6;
  static double step(double at);
};

double central_difference(const Expr& e, std::span<const double> point, std::size_t var);

}  // namespace mstat
