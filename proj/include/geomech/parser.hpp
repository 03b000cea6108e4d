#pragma once

// Recursive-descent parser for the coefficient DSL.
//
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := atom ('^' unary)?          right-associative, binds tighter than '-'
//   atom  := number | ident | func '(' expr (',' expr)? ')' | '(' expr ')'
//   ident := ('x'|'v') digits            1-based, at most the declared dimension
//   func  := sin | cos | exp | log | sqrt | atan2

#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>

#include "geomech/errors.hpp"
#include "geomech/expr.hpp"

namespace geomech {

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, std::size_t dim) : text_(text), dim_(dim) {}

  Expr parse() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    Expr e = expr();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        lhs = lhs / unary();
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  Expr atom() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  Expr number() {
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
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits();
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      throw ParseError("malformed number", start);
    return Expr(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if ((name[0] == 'x' || name[0] == 'v') && name.size() > 1 &&
        name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      std::size_t index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (index == 0 || index > dim_)
        throw ParseError("symbol '" + std::string(name) + "' index out of range for dimension " +
                             std::to_string(dim_),
                         start);
      return name[0] == 'x' ? Expr::coord(index - 1) : Expr::vel(index - 1);
    }

    Op op;
    if (name == "sin") op = Op::sin;
    else if (name == "cos") op = Op::cos;
    else if (name == "exp") op = Op::exp;
    else if (name == "log") op = Op::log;
    else if (name == "sqrt") op = Op::sqrt;
    else if (name == "atan2") op = Op::atan2;
    else throw ParseError("unknown identifier '" + std::string(name) + "'", start);

    expect('(');
    Expr a = expr();
    if (op == Op::atan2) {
      expect(',');
      Expr b = expr();
      expect(')');
      return atan2(a, b);
    }
    if (accept(',')) throw ParseError(std::string(name) + " takes one argument", pos_ - 1);
    expect(')');
    switch (op) {
      case Op::sin: return sin(a);
      case Op::cos: return cos(a);
      case Op::exp: return exp(a);
      case Op::log: return log(a);
      default: return sqrt(a);
    }
  }

  std::string_view text_;
  std::size_t dim_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses DSL text for a chart of dimension `dim`.
inline Expr parse(std::string_view text, std::size_t dim) {
  if (dim == 0) throw PreconditionError("dimension must be at least 1");
  return detail::Parser(text, dim).parse();
}

}  // namespace geomech
