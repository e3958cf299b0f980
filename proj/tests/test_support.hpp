#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "erlab/expr.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/simplify.hpp"

namespace testing_support {

inline double u01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline int pick(std::mt19937_64& g, int n) { return static_cast<int>(g() % static_cast<std::uint64_t>(n)); }

/// Random expression that is finite and smooth on [0.5, 1.5]^k.
inline erlab::Expr random_expr(std::mt19937_64& g, const std::vector<std::string>& vars, int depth) {
  using namespace erlab;
  if (depth <= 0 || pick(g, 5) == 0) {
    if (pick(g, 3) == 0) return Expr(Rational(1 + pick(g, 5), 1 + pick(g, 2)));
    return var(vars[static_cast<std::size_t>(pick(g, static_cast<int>(vars.size())))]);
  }
  Expr a = random_expr(g, vars, depth - 1);
  switch (pick(g, 10)) {
    case 0: return a + random_expr(g, vars, depth - 1);
    case 1: return a - random_expr(g, vars, depth - 1);
    case 2:
    case 3: return a * random_expr(g, vars, depth - 1);
    case 4: {
      Expr b = random_expr(g, vars, depth - 1);
      return a / (Expr(1) + pow(b, Expr(2)));
    }
    case 5: return sin(a);
    case 6: return cos(a);
    case 7: return exp(sin(a));
    case 8: return pick(g, 2) ? log(Expr(1) + pow(a, Expr(2))) : sqrt(Expr(2) + cos(a));
    default: return pow(a, Expr(2 + pick(g, 2)));
  }
}

inline double central_difference(const erlab::Expr& f, const std::vector<std::string>& vars, std::vector<double> p,
                                 const std::string& v, double h) {
  std::size_t i = 0;
  while (vars[i] != v) ++i;
  double x = p[i];
  p[i] = x + h;
  double fp = erlab::evaluate(f, vars, p);
  p[i] = x - h;
  double fm = erlab::evaluate(f, vars, p);
  return (fp - fm) / (2 * h);
}

struct CorpusEntry {
  std::string text;
  std::vector<std::string> vars;
  double lo, hi;
  bool special;

  erlab::FunctionSpec spec() const { return erlab::make_spec(text, vars, lo, hi); }
};

/// Eight special forms and eight expanding functions.
inline std::vector<CorpusEntry> corpus() {
  const std::vector<std::string> xy = {"x", "y"}, xyz = {"x", "y", "z"};
  return {
      {"x + y", xy, 0.5, 1.5, true},
      {"x*y", xy, 0.5, 1.5, true},
      {"x + y + x*y", xy, 0.5, 1.5, true},
      {"x^2*y", xy, 0.5, 1.5, true},
      {"(x + y^2)^3", xy, 0.5, 1.5, true},
      {"x + y + z", xyz, 0.5, 1.5, true},
      {"x*y*z", xyz, 1.0, 2.0, true},
      {"exp(x + y^2 + z^3)", xyz, 0.5, 1.5, true},
      {"x^2 + x*y", xy, 0.5, 1.5, false},
      {"x*y + y^2", xy, 0.5, 1.5, false},
      {"x*(y + z)", xyz, 0.5, 1.5, false},
      {"x*y + z", xyz, 0.5, 1.5, false},
      {"x*y + y*z + z*x", xyz, 0.5, 1.5, false},
      {"sin(x) + x*y", xy, 0.5, 1.5, false},
      {"x^2 + x*y + y^3", xy, 0.5, 1.5, false},
      {"x + y*z", xyz, 0.5, 1.5, false},
  };
}

// Determinant by Gaussian elimination with partial pivoting, independent of Eigen.
inline double gauss_det(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    }
    if (a[p][c] == 0) return 0;
    if (p != c) {
      std::swap(a[p], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

inline std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> r(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(i)].push_back(m(i, j));
  }
  return r;
}

inline erlab::Expr random_cubic3(std::mt19937_64& g) {
  using namespace erlab;
  Expr f(0);
  const char* v[3] = {"x", "y", "z"};
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; a + b <= 3; ++b) {
      for (int c = 0; a + b + c <= 3; ++c) {
        if (a + b + c == 0) continue;
        int coef = static_cast<int>(g() % 7) - 3;
        if (coef == 0) continue;
        Expr m(coef);
        if (a) m = m * pow(var(v[0]), Expr(a));
        if (b) m = m * pow(var(v[1]), Expr(b));
        if (c) m = m * pow(var(v[2]), Expr(c));
        f = f + m;
      }
    }
  }
  return simplify(f);
}

}  // namespace testing_support
