#pragma once

// Scalar expressions over coordinates x1..xn and velocities v1..vn.
//
// An Expr is an immutable, shared expression tree. Builders fold constants
// and drop additive/multiplicative identities; nothing beyond that is
// simplified. Two expressions are compared by evaluation, never structurally.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "geomech/errors.hpp"

namespace geomech {

enum class SymbolKind : std::uint8_t { coord, vel };

/// A coordinate or velocity symbol. `index` is 0-based (x1 has index 0).
struct Symbol {
  SymbolKind kind = SymbolKind::coord;
  std::size_t index = 0;

  static constexpr Symbol x(std::size_t i) { return {SymbolKind::coord, i}; }
  static constexpr Symbol v(std::size_t i) { return {SymbolKind::vel, i}; }
  friend constexpr bool operator==(Symbol, Symbol) = default;
};

enum class Op : std::uint8_t {
  num,
  coord,
  vel,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  sin,
  cos,
  exp,
  log,
  sqrt,
  atan2,
};

namespace detail {

struct Node {
  Op op = Op::num;
  double value = 0.0;
  std::size_t index = 0;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

using NodePtr = std::shared_ptr<const Node>;

inline bool is_binary(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
    case Op::atan2:
      return true;
    default:
      return false;
  }
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::atan2: return "atan2";
    default: return "";
  }
}

/// Applies one operator to already evaluated operands.
inline double apply(Op op, double a, double b) {
  double r = 0.0;
  switch (op) {
    case Op::add: r = a + b; break;
    case Op::sub: r = a - b; break;
    case Op::mul: r = a * b; break;
    case Op::div:
      if (b == 0.0) throw DomainError("division by zero");
      r = a / b;
      break;
    case Op::pow:
      if (a < 0.0 && std::trunc(b) != b)
        throw DomainError("negative base with non-integer exponent");
      if (a == 0.0 && b < 0.0) throw DomainError("zero base with negative exponent");
      r = std::pow(a, b);
      break;
    case Op::neg: r = -a; break;
    case Op::sin: r = std::sin(a); break;
    case Op::cos: r = std::cos(a); break;
    case Op::exp: r = std::exp(a); break;
    case Op::log:
      if (!(a > 0.0)) throw DomainError("log of nonpositive argument");
      r = std::log(a);
      break;
    case Op::sqrt:
      if (!(a > 0.0)) throw DomainError("sqrt of nonpositive argument");
      r = std::sqrt(a);
      break;
    case Op::atan2: r = std::atan2(a, b); break;
    default: throw Error("apply: not an operator");
  }
  if (!std::isfinite(r)) throw OverflowError("non-finite value in expression evaluation");
  return r;
}

inline double eval_node(const Node& n, std::span<const double> x, std::span<const double> v) {
  switch (n.op) {
    case Op::num: return n.value;
    case Op::coord:
      if (n.index >= x.size()) throw PreconditionError("coordinate symbol outside state dimension");
      return x[n.index];
    case Op::vel:
      if (n.index >= v.size()) throw PreconditionError("velocity symbol outside state dimension");
      return v[n.index];
    default: break;
  }
  const double a = eval_node(*n.a, x, v);
  const double b = n.b ? eval_node(*n.b, x, v) : 0.0;
  return apply(n.op, a, b);
}

}  // namespace detail

class Expr {
 public:
  Expr() : Expr(0.0) {}
  Expr(double c) : node_(make_number(c)) {}  // NOLINT(google-explicit-constructor)

  static Expr symbol(Symbol s) {
    auto n = std::make_shared<detail::Node>();
    n->op = s.kind == SymbolKind::coord ? Op::coord : Op::vel;
    n->index = s.index;
    return Expr(std::move(n));
  }
  static Expr coord(std::size_t i) { return symbol(Symbol::x(i)); }
  static Expr vel(std::size_t i) { return symbol(Symbol::v(i)); }

  /// Raw node construction, no folding.
  static Expr make(Op op, const Expr& a, const Expr& b = Expr()) {
    auto n = std::make_shared<detail::Node>();
    n->op = op;
    n->a = a.node_;
    if (detail::is_binary(op)) n->b = b.node_;
    return Expr(std::move(n));
  }

  Op op() const { return node_->op; }
  bool is_number() const { return node_->op == Op::num; }
  bool is_number(double c) const { return is_number() && node_->value == c; }
  bool is_zero() const { return is_number(0.0); }
  double number() const { return node_->value; }
  std::size_t symbol_index() const { return node_->index; }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }

  double eval(std::span<const double> x, std::span<const double> v = {}) const {
    return detail::eval_node(*node_, x, v);
  }

  bool depends_on(Symbol s) const { return depends(*node_, [s](Op op, std::size_t i) {
    return i == s.index && op == (s.kind == SymbolKind::coord ? Op::coord : Op::vel);
  }); }
  bool depends_on_velocity() const {
    return depends(*node_, [](Op op, std::size_t) { return op == Op::vel; });
  }
  /// One past the largest symbol index used, 0 for constant expressions.
  std::size_t symbol_bound() const { return bound(*node_); }
  std::size_t node_count() const { return count(*node_); }

  const detail::Node& node() const { return *node_; }

 private:
  explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}

  static detail::NodePtr make_number(double c) {
    static const detail::NodePtr zero = [] {
      auto n = std::make_shared<detail::Node>();
      return n;
    }();
    if (c == 0.0 && !std::signbit(c)) return zero;
    auto n = std::make_shared<detail::Node>();
    n->value = c;
    return n;
  }

  template <class Pred>
  static bool depends(const detail::Node& n, const Pred& pred) {
    if (n.op == Op::coord || n.op == Op::vel) return pred(n.op, n.index);
    if (n.op == Op::num) return false;
    return depends(*n.a, pred) || (n.b && depends(*n.b, pred));
  }
  static std::size_t bound(const detail::Node& n) {
    if (n.op == Op::coord || n.op == Op::vel) return n.index + 1;
    if (n.op == Op::num) return 0;
    const std::size_t l = bound(*n.a);
    const std::size_t r = n.b ? bound(*n.b) : 0;
    return l > r ? l : r;
  }
  static std::size_t count(const detail::Node& n) {
    if (n.op == Op::num || n.op == Op::coord || n.op == Op::vel) return 1;
    return 1 + count(*n.a) + (n.b ? count(*n.b) : 0);
  }

  detail::NodePtr node_;
};

namespace detail {

/// Folds an all-constant node unless folding would raise an evaluation error,
/// in which case the node is kept so that the error surfaces at eval time.
inline Expr fold_or_make(Op op, const Expr& a, const Expr& b = Expr()) {
  if (a.is_number() && (!is_binary(op) || b.is_number())) {
    try {
      return Expr(apply(op, a.number(), is_binary(op) ? b.number() : 0.0));
    } catch (const Error&) {
    }
  }
  return Expr::make(op, a, b);
}

}  // namespace detail

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return detail::fold_or_make(Op::add, a, b);
}

inline Expr operator-(const Expr& a) {
  if (a.op() == Op::neg) return a.lhs();
  return detail::fold_or_make(Op::neg, a);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return detail::fold_or_make(Op::sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  if (a.is_number(-1.0)) return -b;
  if (b.is_number(-1.0)) return -a;
  return detail::fold_or_make(Op::mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_zero() && !b.is_zero()) return Expr(0.0);
  if (b.is_number(1.0)) return a;
  return detail::fold_or_make(Op::div, a, b);
}

inline Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_zero()) return Expr(1.0);
  if (exponent.is_number(1.0)) return base;
  return detail::fold_or_make(Op::pow, base, exponent);
}

inline Expr sin(const Expr& a) { return detail::fold_or_make(Op::sin, a); }
inline Expr cos(const Expr& a) { return detail::fold_or_make(Op::cos, a); }
inline Expr exp(const Expr& a) { return detail::fold_or_make(Op::exp, a); }
inline Expr log(const Expr& a) { return detail::fold_or_make(Op::log, a); }
inline Expr sqrt(const Expr& a) { return detail::fold_or_make(Op::sqrt, a); }
inline Expr atan2(const Expr& y, const Expr& x) { return detail::fold_or_make(Op::atan2, y, x); }

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

/// Exact partial derivative with respect to one symbol.
inline Expr diff(const Expr& e, Symbol s) {
  switch (e.op()) {
    case Op::num: return Expr(0.0);
    case Op::coord:
      return Expr(s.kind == SymbolKind::coord && e.symbol_index() == s.index ? 1.0 : 0.0);
    case Op::vel:
      return Expr(s.kind == SymbolKind::vel && e.symbol_index() == s.index ? 1.0 : 0.0);
    default: break;
  }
  const Expr a = e.lhs();
  const Expr da = diff(a, s);
  switch (e.op()) {
    case Op::add: return da + diff(e.rhs(), s);
    case Op::sub: return da - diff(e.rhs(), s);
    case Op::mul: return da * e.rhs() + a * diff(e.rhs(), s);
    case Op::div: {
      const Expr b = e.rhs();
      const Expr db = diff(b, s);
      if (db.is_zero()) return da / b;
      return (da * b - a * db) / (b * b);
    }
    case Op::pow: {
      const Expr b = e.rhs();
      if (b.is_number()) return b * pow(a, Expr(b.number() - 1.0)) * da;
      const Expr db = diff(b, s);
      return e * (db * log(a) + b * da / a);
    }
    case Op::neg: return -da;
    case Op::sin: return cos(a) * da;
    case Op::cos: return -(sin(a) * da);
    case Op::exp: return e * da;
    case Op::log: return da / a;
    case Op::sqrt: return da / (Expr(2.0) * e);
    case Op::atan2: {
      // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2), undefined at the origin.
      const Expr x = e.rhs();
      const Expr dx = diff(x, s);
      return (x * da - a * dx) / (x * x + a * a);
    }
    default: throw Error("diff: unknown operator");
  }
}

/// Rebuilds `e` replacing symbols for which `repl` returns a value.
inline Expr substitute(const Expr& e, const std::function<std::optional<Expr>(Symbol)>& repl) {
  switch (e.op()) {
    case Op::num: return e;
    case Op::coord:
    case Op::vel: {
      const Symbol s{e.op() == Op::coord ? SymbolKind::coord : SymbolKind::vel, e.symbol_index()};
      if (auto r = repl(s)) return *r;
      return e;
    }
    default: break;
  }
  const Expr a = substitute(e.lhs(), repl);
  switch (e.op()) {
    case Op::add: return a + substitute(e.rhs(), repl);
    case Op::sub: return a - substitute(e.rhs(), repl);
    case Op::mul: return a * substitute(e.rhs(), repl);
    case Op::div: return a / substitute(e.rhs(), repl);
    case Op::pow: return pow(a, substitute(e.rhs(), repl));
    case Op::atan2: return atan2(a, substitute(e.rhs(), repl));
    case Op::neg: return -a;
    default: return detail::fold_or_make(e.op(), a);
  }
}

namespace detail {

inline std::string format_number(double c) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, c);
  return std::string(buf, res.ptr);
}

// Binding strength used by the printer: 1 sum, 2 product, 3 unary minus,
// 4 power, 5 atom.
inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    case Op::num: return e.number() < 0.0 || std::signbit(e.number()) ? 3 : 5;
    default: return 5;
  }
}

inline void print(const Expr& e, std::string& out, int required);

inline void print_child(const Expr& e, std::string& out, int required) {
  if (precedence(e) < required) {
    out += '(';
    print(e, out, 0);
    out += ')';
  } else {
    print(e, out, required);
  }
}

inline void print(const Expr& e, std::string& out, int /*required*/) {
  switch (e.op()) {
    case Op::num: out += format_number(e.number()); return;
    case Op::coord: out += 'x' + std::to_string(e.symbol_index() + 1); return;
    case Op::vel: out += 'v' + std::to_string(e.symbol_index() + 1); return;
    case Op::add:
    case Op::sub:
      print_child(e.lhs(), out, 1);
      out += e.op() == Op::add ? " + " : " - ";
      print_child(e.rhs(), out, 2);
      return;
    case Op::mul:
    case Op::div:
      print_child(e.lhs(), out, 2);
      out += e.op() == Op::mul ? '*' : '/';
      print_child(e.rhs(), out, 3);
      return;
    case Op::neg:
      out += '-';
      print_child(e.lhs(), out, 4);
      return;
    case Op::pow:
      print_child(e.lhs(), out, 5);
      out += '^';
      print_child(e.rhs(), out, 3);
      return;
    case Op::atan2:
      out += "atan2(";
      print(e.lhs(), out, 0);
      out += ", ";
      print(e.rhs(), out, 0);
      out += ')';
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.lhs(), out, 0);
      out += ')';
      return;
  }
}

}  // namespace detail

/// Prints in the DSL grammar; the output re-parses to an eval-equal tree.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out, 0);
  return out;
}

}  // namespace geomech
