#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/parse.hpp"
#include "erlab/random.hpp"

namespace erlab {

struct Interval {
  double lo = 0;
  double hi = 1;
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

using Box = std::vector<Interval>;

inline std::vector<double> box_center(const Box& b) {
  std::vector<double> c;
  for (const auto& i : b) c.push_back(i.center());
  return c;
}

inline std::vector<double> sample_box(const Box& b, std::mt19937_64& g) {
  std::vector<double> p;
  p.reserve(b.size());
  for (const auto& i : b) p.push_back(uniform(g, i.lo, i.hi));
  return p;
}

inline bool box_contains(const Box& b, const std::vector<double>& p) {
  if (p.size() != b.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!b[i].contains(p[i])) return false;
  }
  return true;
}

/// An expression together with its ordered variables and domain box.
struct FunctionSpec {
  Expr expr;
  std::vector<std::string> vars;
  Box box;

  std::size_t arity() const { return vars.size(); }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& v : vars) {
      if (!seen.insert(v).second) throw PreconditionError("duplicate variable '" + v + "'");
    }
    if (box.size() != vars.size()) {
      throw PreconditionError("box has " + std::to_string(box.size()) + " intervals for " +
                              std::to_string(vars.size()) + " variables");
    }
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (!(box[i].lo < box[i].hi)) throw PreconditionError("empty interval for '" + vars[i] + "'");
    }
    for (const auto& v : variables(expr)) {
      if (!seen.count(v)) throw PreconditionError("expression uses undeclared variable '" + v + "'");
    }
  }

  double operator()(std::span<const double> x) const { return CompiledExpr(expr, vars)(x); }
};

inline FunctionSpec make_spec(const std::string& text, std::vector<std::string> vars, Box box) {
  FunctionSpec f{parse(text), std::move(vars), std::move(box)};
  f.validate();
  return f;
}

/// Same box on every variable.
inline FunctionSpec make_spec(const std::string& text, std::vector<std::string> vars, double lo, double hi) {
  Box b(vars.size(), Interval{lo, hi});
  return make_spec(text, std::move(vars), std::move(b));
}

}  // namespace erlab
