#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/simplify.hpp"

namespace erlab {

/// Rectangular matrix of expressions, row-major.
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, Expr(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Expr& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Expr& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < rows_; ++i) {
      s += i ? ", [" : "[";
      for (std::size_t j = 0; j < cols_; ++j) {
        if (j) s += ", ";
        s += to_string((*this)(i, j));
      }
      s += "]";
    }
    return s + "]";
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Expr> a_;
};

/// Compiled form of an ExprMatrix for repeated numeric evaluation.
class CompiledMatrix {
 public:
  CompiledMatrix(const ExprMatrix& m, const std::vector<std::string>& vars) : rows_(m.rows()), cols_(m.cols()) {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) entries_.emplace_back(m(i, j), vars);
    }
  }

  /// Throws DomainError when an entry cannot be evaluated at x.
  Eigen::MatrixXd operator()(std::span<const double> x) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries_[i * cols_ + j](x);
      }
    }
    return out;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<CompiledExpr> entries_;
};

inline Eigen::MatrixXd evaluate(const ExprMatrix& m, const std::vector<std::string>& vars, std::span<const double> x) {
  return CompiledMatrix(m, vars)(x);
}

namespace detail {

inline Expr laplace_det(const ExprMatrix& m, std::vector<std::size_t>& rows, std::vector<bool>& used_cols,
                        std::size_t depth) {
  if (depth == rows.size()) return Expr(1);
  std::size_t r = rows[depth];
  Expr sum(0);
  bool any = false;
  int sign = 1;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (used_cols[c]) continue;
    const Expr& a = m(r, c);
    if (!a.is_zero()) {
      used_cols[c] = true;
      Expr minor = laplace_det(m, rows, used_cols, depth + 1);
      used_cols[c] = false;
      if (!minor.is_zero()) {
        Expr term = a * minor;
        if (!any) {
          sum = sign > 0 ? term : -term;
          any = true;
        } else {
          sum = sign > 0 ? sum + term : sum - term;
        }
      }
    }
    sign = -sign;
  }
  return simplify(sum);
}

}  // namespace detail

/// Symbolic determinant by cofactor expansion along successive rows,
/// simplified at each level.
inline Expr symbolic_det(const ExprMatrix& m) {
  if (m.rows() != m.cols()) throw PreconditionError("determinant of a non-square matrix");
  if (m.rows() == 0) return Expr(1);
  std::vector<std::size_t> rows(m.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<bool> used(m.cols(), false);
  return detail::laplace_det(m, rows, used, 0);
}

struct CorankResult {
  int corank = 0;
  Eigen::VectorXd singular_values;
};

/// Rank defect of a numeric matrix: min(rows, cols) minus the number of
/// singular values above tol * sigma_max.
inline CorankResult numeric_corank(const Eigen::MatrixXd& a, double tol = 1e-9) {
  if (!(tol > 0)) throw PreconditionError("corank tolerance must be positive");
  CorankResult r;
  const int n = static_cast<int>(std::min(a.rows(), a.cols()));
  if (n == 0) return r;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  r.singular_values = svd.singularValues();
  double smax = r.singular_values.size() ? r.singular_values(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) {
    if (smax > 0 && r.singular_values(i) > tol * smax) ++rank;
  }
  r.corank = n - rank;
  return r;
}

inline CorankResult numeric_corank(const ExprMatrix& m, const std::vector<std::string>& vars,
                                   std::span<const double> point, double tol = 1e-9) {
  return numeric_corank(evaluate(m, vars, point), tol);
}

}  // namespace erlab
