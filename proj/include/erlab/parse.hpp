#pragma once

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>

#include "erlab/errors.hpp"
#include "erlab/expr.hpp"

namespace erlab {

namespace detail {

// expr    := term (('+' | '-') term)*
// term    := unary (('*' | '/') unary)*
// unary   := ('-' | '+') unary | power
// power   := primary ('^' unary)?        right-associative
// primary := number | ident | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr run() {
    skip();
    if (pos_ == s_.size()) throw ParseError("empty input", 0);
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (eat('+')) {
        e = e + term();
      } else if (eat('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) {
        e = e * unary();
      } else if (eat('/')) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (eat('^')) return pow(base, unary());
    return base;
  }

  Expr primary() {
    skip();
    if (pos_ == s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      while (pos_ < s_.size() && s_[pos_] == '\'') ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      if (peek() == '(') {
        Kind k;
        if (name == "sin") {
          k = Kind::Sin;
        } else if (name == "cos") {
          k = Kind::Cos;
        } else if (name == "exp") {
          k = Kind::Exp;
        } else if (name == "log") {
          k = Kind::Log;
        } else if (name == "sqrt") {
          k = Kind::Sqrt;
        } else {
          throw ParseError("unknown function '" + name + "'", start);
        }
        eat('(');
        Expr a = expr();
        if (!eat(')')) throw ParseError("expected ')'", pos_);
        return Expr::unary(k, a);
      }
      return var(name);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  // Decimal literals become exact rationals when numerator and denominator stay
  // below 2^53 (so the rational rounds to the same double), doubles otherwise.
  Expr number() {
    std::size_t start = pos_;
    std::string digits;
    int scale = 0;
    bool any = false;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      digits += s_[pos_++];
      any = true;
    }
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        digits += s_[pos_++];
        --scale;
        any = true;
      }
    }
    if (!any) throw ParseError("malformed number", start);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      bool neg = false;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) neg = s_[pos_++] == '-';
      std::string ex;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ex += s_[pos_++];
      if (ex.empty()) {
        pos_ = save;
      } else {
        if (ex.size() > 4) throw ParseError("exponent out of range", save);
        int v = std::stoi(ex);
        scale += neg ? -v : v;
      }
    }
    std::string text(s_.substr(start, pos_ - start));
    std::size_t nz = digits.find_first_not_of('0');
    digits = nz == std::string::npos ? "0" : digits.substr(nz);
    if (digits.size() <= 15 && scale >= -15 && scale <= 15) {
      std::int64_t n = std::stoll(digits);
      std::int64_t p = 1;
      for (int i = 0; i < (scale < 0 ? -scale : scale); ++i) p *= 10;
      try {
        return scale < 0 ? Expr(Rational(n, p)) : Expr(Rational(n) * Rational(p));
      } catch (const std::overflow_error&) {
      }
    }
    return Expr::number(std::strtod(text.c_str(), nullptr));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses infix expression text. Throws ParseError carrying a byte offset.
inline Expr parse(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (static_cast<unsigned char>(text[i]) > 127) throw ParseError("non-ASCII input", i);
  }
  return detail::Parser(text).run();
}

}  // namespace erlab
