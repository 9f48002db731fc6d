#include "mstat/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "mstat/errors.hpp"

namespace mstat {

namespace {

std::shared_ptr<Node> make_node(Node::Kind kind) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  return n;
}

}  // namespace

Expr::Expr() {
  static const std::shared_ptr<const Node> zero = [] {
    auto n = make_node(Node::Kind::Constant);
    n->value = 0;
    return n;
  }();
  node_ = zero;
}

Expr Expr::constant(const Rational& value) {
  auto n = make_node(Node::Kind::Constant);
  n->value = value;
  n->value_d = to_double(value);
  return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index, std::string name) {
  auto n = make_node(Node::Kind::Variable);
  n->index = index;
  n->name = std::move(name);
  return Expr(std::move(n));
}

bool Expr::is_constant() const { return node_->kind == Node::Kind::Constant; }

bool Expr::is_constant(long value) const { return is_constant() && node_->value == value; }

Expr Expr::unary(UnaryOp op, const Expr& arg) {
  if (op == UnaryOp::Neg && arg.is_constant()) return constant(-arg.node().value);
  auto n = make_node(Node::Kind::Unary);
  n->uop = op;
  n->lhs = arg;
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, const Expr& lhs, const Expr& rhs) {
  const bool lc = lhs.is_constant();
  const bool rc = rhs.is_constant();
  switch (op) {
    case BinaryOp::Add:
      if (lc && rc) return constant(lhs.node().value + rhs.node().value);
      if (lhs.is_constant(0)) return rhs;
      if (rhs.is_constant(0)) return lhs;
      break;
    case BinaryOp::Sub:
      if (lc && rc) return constant(lhs.node().value - rhs.node().value);
      if (rhs.is_constant(0)) return lhs;
      if (lhs.is_constant(0)) return unary(UnaryOp::Neg, rhs);
      break;
    case BinaryOp::Mul:
      if (lc && rc) return constant(lhs.node().value * rhs.node().value);
      if (lhs.is_constant(0) || rhs.is_constant(0)) return constant(0L);
      if (lhs.is_constant(1)) return rhs;
      if (rhs.is_constant(1)) return lhs;
      break;
    case BinaryOp::Div:
      // A zero denominator is left in the tree so evaluation reports it.
      if (lc && rc && sgn(rhs.node().value) != 0) return constant(lhs.node().value / rhs.node().value);
      if (rhs.is_constant(1)) return lhs;
      break;
  }
  auto n = make_node(Node::Kind::Binary);
  n->bop = op;
  n->lhs = lhs;
  n->rhs = rhs;
  return Expr(std::move(n));
}

Expr Expr::power(const Expr& base, unsigned exponent) {
  if (exponent == 0) return constant(1L);
  if (exponent == 1) return base;
  if (base.is_constant()) {
    Rational r(1);
    for (unsigned i = 0; i < exponent; ++i) r *= base.node().value;
    return constant(r);
  }
  auto n = make_node(Node::Kind::Power);
  n->exponent = exponent;
  n->lhs = base;
  return Expr(std::move(n));
}

bool Expr::is_rational() const {
  switch (node_->kind) {
    case Node::Kind::Constant:
    case Node::Kind::Variable:
      return true;
    case Node::Kind::Unary:
      return node_->uop == UnaryOp::Neg && node_->lhs.is_rational();
    case Node::Kind::Binary:
      return node_->lhs.is_rational() && node_->rhs.is_rational();
    case Node::Kind::Power:
      return node_->lhs.is_rational();
  }
  return false;
}

std::size_t Expr::arity() const {
  switch (node_->kind) {
    case Node::Kind::Constant:
      return 0;
    case Node::Kind::Variable:
      return node_->index + 1;
    case Node::Kind::Unary:
    case Node::Kind::Power:
      return node_->lhs.arity();
    case Node::Kind::Binary:
      return std::max(node_->lhs.arity(), node_->rhs.arity());
  }
  return 0;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case Node::Kind::Constant:
      return x.value == y.value;
    case Node::Kind::Variable:
      return x.index == y.index;
    case Node::Kind::Unary:
      return x.uop == y.uop && x.lhs == y.lhs;
    case Node::Kind::Binary:
      return x.bop == y.bop && x.lhs == y.lhs && x.rhs == y.rhs;
    case Node::Kind::Power:
      return x.exponent == y.exponent && x.lhs == y.lhs;
  }
  return false;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }

std::string variable_name(std::size_t index, std::size_t n) {
  return index < n ? "x" + std::to_string(index + 1) : "y" + std::to_string(index - n + 1);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::size_t n, std::size_t m) : text_(text), n_(n), m_(m) {}

  Expr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "expression", "end of input");
    Expr e = parse_sum();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError(pos_, "operator or end of input", describe_here());
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string describe_here() const {
    if (pos_ >= text_.size()) return "end of input";
    return "'" + std::string(1, text_[pos_]) + "'";
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = lhs + parse_product();
      else if (accept('-'))
        lhs = lhs - parse_product();
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * parse_unary();
      else if (accept('/'))
        lhs = lhs / parse_unary();
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError(pos_, "non-negative integer exponent", describe_here());
    unsigned exponent = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
    if (ec != std::errc{} || exponent > 64)
      throw ParseError(start, "integer exponent at most 64", std::string(text_.substr(start, pos_ - start)));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '^')
      throw ParseError(pos_, "operator (chained powers need parentheses)", "'^'");
    return Expr::power(base, exponent);
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "operand", "end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) throw ParseError(pos_, "')'", describe_here());
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    throw ParseError(pos_, "operand", describe_here());
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t exp_start = pos_;
      digits();
      if (exp_start == pos_) pos_ = save;  // 'e' belongs to something else
    }
    std::string literal(text_.substr(start, pos_ - start));
    if (literal == ".") throw ParseError(start, "number", "'.'");
    return Expr::constant(parse_rational(literal));
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string ident(text_.substr(start, pos_ - start));

    if (ident == "sin" || ident == "cos" || ident == "exp") {
      if (!accept('(')) throw ParseError(pos_, "'(' after " + ident, describe_here());
      Expr arg = parse_sum();
      if (!accept(')')) throw ParseError(pos_, "')'", describe_here());
      UnaryOp op = ident == "sin" ? UnaryOp::Sin : ident == "cos" ? UnaryOp::Cos : UnaryOp::Exp;
      return Expr::unary(op, arg);
    }

    const std::string expected = "declared variable (x1..x" + std::to_string(n_) + ", y1..y" +
                                 std::to_string(m_) + ") or function";
    if (ident.size() < 2 || (ident[0] != 'x' && ident[0] != 'y') || ident[1] == '0')
      throw ParseError(start, expected, "'" + ident + "'");
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), k);
    if (ec != std::errc{} || ptr != ident.data() + ident.size())
      throw ParseError(start, expected, "'" + ident + "'");
    const std::size_t limit = ident[0] == 'x' ? n_ : m_;
    if (k == 0 || k > limit) throw ParseError(start, expected, "'" + ident + "'");
    const std::size_t index = ident[0] == 'x' ? k - 1 : n_ + k - 1;
    return Expr::variable(index, ident);
  }

  std::string_view text_;
  std::size_t n_, m_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, std::size_t n, std::size_t m) { return Parser(text, n, m).run(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

// Binding strength of the printed form.
constexpr int kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5;

int precedence(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Constant:
      if (n.value.get_den() != 1) return kProduct;
      return sgn(n.value) < 0 ? kUnary : kAtom;
    case Node::Kind::Variable:
      return kAtom;
    case Node::Kind::Unary:
      return n.uop == UnaryOp::Neg ? kUnary : kAtom;
    case Node::Kind::Binary:
      return (n.bop == BinaryOp::Add || n.bop == BinaryOp::Sub) ? kSum : kProduct;
    case Node::Kind::Power:
      return kPower;
  }
  return kAtom;
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Constant:
      out += n.value.get_str();
      return;
    case Node::Kind::Variable:
      out += n.name;
      return;
    case Node::Kind::Unary:
      if (n.uop == UnaryOp::Neg) {
        out += '-';
        // "--x" would still parse, but a space keeps the text readable.
        if (precedence(n.lhs) == kUnary) out += ' ';
        print_child(n.lhs, kUnary, out);
      } else {
        out += n.uop == UnaryOp::Sin ? "sin(" : n.uop == UnaryOp::Cos ? "cos(" : "exp(";
        print(n.lhs, out);
        out += ')';
      }
      return;
    case Node::Kind::Binary: {
      const int p = precedence(e);
      static constexpr const char* symbols[] = {" + ", " - ", " * ", " / "};
      print_child(n.lhs, p, out);
      out += symbols[static_cast<int>(n.bop)];
      print_child(n.rhs, p + 1, out);
      return;
    }
    case Node::Kind::Power:
      print_child(n.lhs, kAtom, out);
      out += '^';
      out += std::to_string(n.exponent);
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Calculus and evaluation

Expr differentiate(const Expr& e, std::size_t var) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Constant:
      return Expr::constant(0L);
    case Node::Kind::Variable:
      return Expr::constant(n.index == var ? 1L : 0L);
    case Node::Kind::Unary: {
      Expr da = differentiate(n.lhs, var);
      switch (n.uop) {
        case UnaryOp::Neg:
          return -da;
        case UnaryOp::Sin:
          return Expr::unary(UnaryOp::Cos, n.lhs) * da;
        case UnaryOp::Cos:
          return -Expr::unary(UnaryOp::Sin, n.lhs) * da;
        case UnaryOp::Exp:
          return e * da;
      }
      break;
    }
    case Node::Kind::Binary: {
      Expr da = differentiate(n.lhs, var);
      Expr db = differentiate(n.rhs, var);
      switch (n.bop) {
        case BinaryOp::Add:
          return da + db;
        case BinaryOp::Sub:
          return da - db;
        case BinaryOp::Mul:
          return da * n.rhs + n.lhs * db;
        case BinaryOp::Div:
          if (db.is_constant(0)) return da / n.rhs;
          return (da * n.rhs - n.lhs * db) / Expr::power(n.rhs, 2);
      }
      break;
    }
    case Node::Kind::Power: {
      Expr da = differentiate(n.lhs, var);
      return Expr::constant(static_cast<long>(n.exponent)) * Expr::power(n.lhs, n.exponent - 1) * da;
    }
  }
  throw InternalError("differentiate: unknown node");
}

namespace {

double eval_rec(const Expr& e, std::span<const double> p) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value_d;
    case Node::Kind::Variable:
      if (n.index >= p.size())
        throw DomainError("variable " + n.name + " outside point of dimension " + std::to_string(p.size()));
      return p[n.index];
    case Node::Kind::Unary: {
      double a = eval_rec(n.lhs, p);
      switch (n.uop) {
        case UnaryOp::Neg:
          return -a;
        case UnaryOp::Sin:
          return std::sin(a);
        case UnaryOp::Cos:
          return std::cos(a);
        case UnaryOp::Exp:
          return std::exp(a);
      }
      break;
    }
    case Node::Kind::Binary: {
      double a = eval_rec(n.lhs, p);
      double b = eval_rec(n.rhs, p);
      switch (n.bop) {
        case BinaryOp::Add:
          return a + b;
        case BinaryOp::Sub:
          return a - b;
        case BinaryOp::Mul:
          return a * b;
        case BinaryOp::Div:
          if (b == 0.0) throw DomainError("division by zero in " + to_string(e));
          return a / b;
      }
      break;
    }
    case Node::Kind::Power:
      return std::pow(eval_rec(n.lhs, p), static_cast<double>(n.exponent));
  }
  throw InternalError("evaluate: unknown node");
}

Rational eval_exact_rec(const Expr& e, std::span<const Rational> p) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable:
      if (n.index >= p.size())
        throw DomainError("variable " + n.name + " outside point of dimension " + std::to_string(p.size()));
      return p[n.index];
    case Node::Kind::Unary:
      return -eval_exact_rec(n.lhs, p);  // only Neg reaches here
    case Node::Kind::Binary: {
      Rational a = eval_exact_rec(n.lhs, p);
      Rational b = eval_exact_rec(n.rhs, p);
      switch (n.bop) {
        case BinaryOp::Add:
          return a + b;
        case BinaryOp::Sub:
          return a - b;
        case BinaryOp::Mul:
          return a * b;
        case BinaryOp::Div:
          if (sgn(b) == 0) throw DomainError("division by zero in " + to_string(e));
          return a / b;
      }
      break;
    }
    case Node::Kind::Power: {
      Rational base = eval_exact_rec(n.lhs, p);
      Rational r(1);
      for (unsigned i = 0; i < n.exponent; ++i) r *= base;
      return r;
    }
  }
  throw InternalError("evaluate_exact: unknown node");
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> point) {
  double v = eval_rec(e, point);
  if (!std::isfinite(v)) throw DomainError("non-finite value of " + to_string(e));
  return v;
}

std::optional<Rational> evaluate_exact(const Expr& e, std::span<const Rational> point) {
  if (!e.is_rational()) return std::nullopt;
  return eval_exact_rec(e, point);
}

double FiniteDifferenceConfig::step(double at) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::fabs(at));
}

double central_difference(const Expr& e, std::span<const double> point, std::size_t var) {
  Vec p(point.begin(), point.end());
  const double h = FiniteDifferenceConfig::step(p[var]);
  const double x0 = p[var];
  p[var] = x0 + h;
  const double up = evaluate(e, p);
  p[var] = x0 - h;
  const double down = evaluate(e, p);
  // The realized step differs from h by rounding of x0 +/- h.
  return (up - down) / ((x0 + h) - (x0 - h));
}

}  // namespace mstat
