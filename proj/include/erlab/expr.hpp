#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/number.hpp"

namespace erlab {

enum class Kind { Const, Var, Neg, Sin, Cos, Exp, Log, Sqrt, Add, Sub, Mul, Div, Pow };

inline bool is_unary(Kind k) { return k >= Kind::Neg && k <= Kind::Sqrt; }
inline bool is_binary(Kind k) { return k >= Kind::Add; }
inline bool is_function(Kind k) { return k >= Kind::Sin && k <= Kind::Sqrt; }

inline const char* function_name(Kind k) {
  switch (k) {
    case Kind::Sin: return "sin";
    case Kind::Cos: return "cos";
    case Kind::Exp: return "exp";
    case Kind::Log: return "log";
    case Kind::Sqrt: return "sqrt";
    default: return "";
  }
}

/// Immutable expression tree over named real variables. Copies share
/// structure; values are safe to share across threads.
class Expr {
 public:
  Expr() : Expr(Number(0)) {}
  Expr(Number c) : node_(std::make_shared<Node>(Node{Kind::Const, c, {}, nullptr, nullptr})) {}  // NOLINT
  Expr(int c) : Expr(Number(c)) {}  // NOLINT
  Expr(Rational c) : Expr(Number(c)) {}  // NOLINT

  static Expr constant(Number c) { return Expr(c); }
  static Expr number(double d) { return Expr(Number::inexact(d)); }
  static Expr variable(std::string name) {
    return Expr(std::make_shared<Node>(Node{Kind::Var, Number(0), std::move(name), nullptr, nullptr}));
  }
  static Expr unary(Kind k, const Expr& a) {
    return Expr(std::make_shared<Node>(Node{k, Number(0), {}, a.node_, nullptr}));
  }
  static Expr binary(Kind k, const Expr& a, const Expr& b) {
    return Expr(std::make_shared<Node>(Node{k, Number(0), {}, a.node_, b.node_}));
  }

  Kind kind() const { return node_->kind; }
  const Number& value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }
  Expr arg() const { return Expr(node_->lhs); }

  bool is_const() const { return kind() == Kind::Const; }
  bool is_zero() const { return is_const() && value().is_zero(); }
  bool is_one() const { return is_const() && value().is_one(); }

  const void* id() const { return node_.get(); }

  friend Expr operator+(const Expr& a, const Expr& b) { return binary(Kind::Add, a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return binary(Kind::Sub, a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return binary(Kind::Mul, a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return binary(Kind::Div, a, b); }
  Expr operator-() const { return unary(Kind::Neg, *this); }

 private:
  struct Node {
    Kind kind;
    Number value;
    std::string name;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

inline Expr var(std::string name) { return Expr::variable(std::move(name)); }
inline Expr pow(const Expr& a, const Expr& b) { return Expr::binary(Kind::Pow, a, b); }
inline Expr sin(const Expr& a) { return Expr::unary(Kind::Sin, a); }
inline Expr cos(const Expr& a) { return Expr::unary(Kind::Cos, a); }
inline Expr exp(const Expr& a) { return Expr::unary(Kind::Exp, a); }
inline Expr log(const Expr& a) { return Expr::unary(Kind::Log, a); }
inline Expr sqrt(const Expr& a) { return Expr::unary(Kind::Sqrt, a); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Kind::Const: return a.value() == b.value();
    case Kind::Var: return a.name() == b.name();
    default: break;
  }
  if (is_unary(a.kind())) return structurally_equal(a.arg(), b.arg());
  return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
}

inline void collect_variables(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == Kind::Var) {
    out.insert(e.name());
  } else if (is_unary(e.kind())) {
    collect_variables(e.arg(), out);
  } else if (is_binary(e.kind())) {
    collect_variables(e.lhs(), out);
    collect_variables(e.rhs(), out);
  }
}

inline std::set<std::string> variables(const Expr& e) {
  std::set<std::string> out;
  collect_variables(e, out);
  return out;
}

inline std::size_t node_count(const Expr& e) {
  if (is_unary(e.kind())) return 1 + node_count(e.arg());
  if (is_binary(e.kind())) return 1 + node_count(e.lhs()) + node_count(e.rhs());
  return 1;
}

/// Replaces variables by expressions; unmapped variables are kept.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& with) {
  switch (e.kind()) {
    case Kind::Const: return e;
    case Kind::Var: {
      auto it = with.find(e.name());
      return it == with.end() ? e : it->second;
    }
    default: break;
  }
  if (is_unary(e.kind())) return Expr::unary(e.kind(), substitute(e.arg(), with));
  return Expr::binary(e.kind(), substitute(e.lhs(), with), substitute(e.rhs(), with));
}

// ---------------------------------------------------------------------------
// Printing. The output is accepted by parse() and evaluates identically.

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    case Kind::Const:
      if (e.value().is_negative() || !e.value().is_integer()) return 5;  // printed parenthesized
      return 5;
    default: return 5;
  }
}

inline void print_to(std::ostream& os, const Expr& e);

inline void print_wrapped(std::ostream& os, const Expr& e, bool wrap) {
  if (wrap) os << '(';
  print_to(os, e);
  if (wrap) os << ')';
}

inline void print_to(std::ostream& os, const Expr& e) {
  switch (e.kind()) {
    case Kind::Const: {
      const Number& v = e.value();
      bool plain = v.exact() ? (v.is_integer() && !v.is_negative()) : !v.is_negative();
      if (plain) {
        os << v.str();
      } else {
        os << '(' << v.str() << ')';
      }
      return;
    }
    case Kind::Var: os << e.name(); return;
    case Kind::Neg:
      // -(a*b) and (-a)*b round identically, so products need no parentheses.
      os << '-';
      print_wrapped(os, e.arg(), precedence(e.arg()) < 2);
      return;
    case Kind::Sin:
    case Kind::Cos:
    case Kind::Exp:
    case Kind::Log:
    case Kind::Sqrt:
      os << function_name(e.kind()) << '(';
      print_to(os, e.arg());
      os << ')';
      return;
    case Kind::Add:
    case Kind::Sub:
      print_wrapped(os, e.lhs(), precedence(e.lhs()) < 1);
      os << (e.kind() == Kind::Add ? " + " : " - ");
      print_wrapped(os, e.rhs(), precedence(e.rhs()) <= 1);
      return;
    case Kind::Mul:
    case Kind::Div:
      print_wrapped(os, e.lhs(), precedence(e.lhs()) < 2);
      os << (e.kind() == Kind::Mul ? "*" : "/");
      print_wrapped(os, e.rhs(), precedence(e.rhs()) <= 2);
      return;
    case Kind::Pow:
      print_wrapped(os, e.lhs(), precedence(e.lhs()) < 5);
      os << '^';
      print_wrapped(os, e.rhs(), precedence(e.rhs()) < 3);
      return;
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  detail::print_to(os, e);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------------------
// Evaluation.

/// Values for a list of variable names, positionally.
struct Assignment {
  std::vector<std::string> names;
  std::vector<double> values;

  std::string describe() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) os << ", ";
      os << names[i] << '=' << values[i];
    }
    os << '}';
    return os.str();
  }
};

/// Flat postfix program for fast repeated evaluation of one expression over
/// a fixed variable order.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::vector<std::string> vars) : vars_(std::move(vars)) {
    emit(e);
    std::size_t depth = 0;
    for (const auto& ins : code_) {
      if (ins.op == Kind::Const || ins.op == Kind::Var) {
        ++depth;
      } else if (is_binary(ins.op)) {
        --depth;
      }
      max_depth_ = std::max(max_depth_, depth);
    }
  }

  const std::vector<std::string>& vars() const { return vars_; }

  /// Evaluates at `x`. Returns the index of the failing instruction, or -1 on
  /// success (result written to `out`).
  int try_eval(std::span<const double> x, double& out) const {
    double stack_buf[64];
    std::vector<double> heap;
    double* st = stack_buf;
    if (max_depth_ > 64) {
      heap.resize(max_depth_);
      st = heap.data();
    }
    std::size_t sp = 0;
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instr& ins = code_[i];
      switch (ins.op) {
        case Kind::Const: st[sp++] = ins.c; break;
        case Kind::Var: st[sp++] = x[ins.index]; break;
        case Kind::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Kind::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Kind::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Kind::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Kind::Log:
          if (!(st[sp - 1] > 0)) return static_cast<int>(i);
          st[sp - 1] = std::log(st[sp - 1]);
          break;
        case Kind::Sqrt:
          if (!(st[sp - 1] >= 0)) return static_cast<int>(i);
          st[sp - 1] = std::sqrt(st[sp - 1]);
          break;
        case Kind::Add: --sp; st[sp - 1] += st[sp]; break;
        case Kind::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Kind::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Kind::Div:
          --sp;
          if (st[sp] == 0.0) return static_cast<int>(i);
          st[sp - 1] /= st[sp];
          break;
        case Kind::Pow: {
          --sp;
          double b = st[sp - 1], e = st[sp];
          bool integral = e == std::floor(e);
          if ((b < 0 && !integral) || (b == 0 && e < 0)) return static_cast<int>(i);
          st[sp - 1] = std::pow(b, e);
          break;
        }
      }
      if (!std::isfinite(st[sp - 1])) return static_cast<int>(i);
    }
    out = st[0];
    return -1;
  }

  /// Throwing evaluation naming the failing subexpression and the point.
  double operator()(std::span<const double> x) const {
    double out = 0;
    int bad = try_eval(x, out);
    if (bad >= 0) {
      Assignment a{vars_, std::vector<double>(x.begin(), x.end())};
      throw DomainError(op_name(code_[static_cast<std::size_t>(bad)].op),
                        to_string(nodes_[static_cast<std::size_t>(bad)]), a.describe());
    }
    return out;
  }

 private:
  struct Instr {
    Kind op;
    double c = 0;
    std::size_t index = 0;
  };

  static std::string op_name(Kind k) {
    switch (k) {
      case Kind::Div: return "division";
      case Kind::Pow: return "pow";
      case Kind::Log: return "log";
      case Kind::Sqrt: return "sqrt";
      case Kind::Exp: return "exp";
      default: return "arithmetic";
    }
  }

  void emit(const Expr& e) {
    if (e.kind() == Kind::Const) {
      code_.push_back({Kind::Const, e.value().value(), 0});
    } else if (e.kind() == Kind::Var) {
      std::size_t idx = vars_.size();
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == e.name()) idx = i;
      }
      if (idx == vars_.size()) throw PreconditionError("variable '" + e.name() + "' is not assigned");
      code_.push_back({Kind::Var, 0, idx});
    } else if (is_unary(e.kind())) {
      emit(e.arg());
      code_.push_back({e.kind(), 0, 0});
    } else {
      emit(e.lhs());
      emit(e.rhs());
      code_.push_back({e.kind(), 0, 0});
    }
    nodes_.push_back(e);
  }

  std::vector<std::string> vars_;
  std::vector<Instr> code_;
  std::vector<Expr> nodes_;
  std::size_t max_depth_ = 0;
};

/// Evaluates `e` at the named point. Throws DomainError naming the offending
/// subexpression instead of producing NaN or infinity.
inline double evaluate(const Expr& e, const Assignment& point) {
  return CompiledExpr(e, point.names)(point.values);
}

inline double evaluate(const Expr& e, const std::vector<std::string>& names, std::span<const double> values) {
  return CompiledExpr(e, names)(values);
}

/// Singular loci introduced by division, log, sqrt and real powers, as
/// printable side conditions.
inline std::vector<std::string> side_conditions(const Expr& e) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](std::string s) {
    if (seen.insert(s).second) out.push_back(std::move(s));
  };
  auto walk = [&](auto&& self, const Expr& n) -> void {
    switch (n.kind()) {
      case Kind::Div:
        if (!n.rhs().is_const()) add(to_string(n.rhs()) + " != 0");
        break;
      case Kind::Log:
        if (!n.arg().is_const()) add(to_string(n.arg()) + " > 0");
        break;
      case Kind::Sqrt:
        if (!n.arg().is_const()) add(to_string(n.arg()) + " >= 0");
        break;
      case Kind::Pow:
        if (!(n.rhs().is_const() && n.rhs().value().is_integer()) && !n.lhs().is_const()) {
          add(to_string(n.lhs()) + " > 0");
        } else if (n.rhs().is_const() && n.rhs().value().is_negative() && !n.lhs().is_const()) {
          add(to_string(n.lhs()) + " != 0");
        }
        break;
      default: break;
    }
    if (is_unary(n.kind())) self(self, n.arg());
    if (is_binary(n.kind())) {
      self(self, n.lhs());
      self(self, n.rhs());
    }
  };
  walk(walk, e);
  return out;
}

}  // namespace erlab
