#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "erlab/degeneracy.hpp"
#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/parallel.hpp"
#include "erlab/quadrature.hpp"
#include "erlab/simplify.hpp"

namespace erlab {

/// Piecewise cubic Hermite interpolant through (x_i, y_i) with slopes dy_i.
class SampledFunction1D {
 public:
  SampledFunction1D() = default;
  SampledFunction1D(std::vector<double> x, std::vector<double> y, std::vector<double> dy)
      : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)) {
    if (x_.size() < 2 || y_.size() != x_.size() || dy_.size() != x_.size()) {
      throw PreconditionError("sampled function needs at least two nodes with one value and slope each");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1])) throw PreconditionError("sampled function grid must be strictly increasing");
    }
    bool up = true, down = true;
    for (std::size_t i = 1; i < y_.size(); ++i) {
      up = up && y_[i] > y_[i - 1];
      down = down && y_[i] < y_[i - 1];
    }
    direction_ = up ? 1 : down ? -1 : 0;
  }

  std::size_t size() const { return x_.size(); }
  const std::vector<double>& grid() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  const std::vector<double>& slopes() const { return dy_; }
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }
  double min_value() const { return std::min(y_.front(), y_.back()); }
  double max_value() const { return std::max(y_.front(), y_.back()); }
  /// +1 increasing, -1 decreasing, 0 otherwise (no inverse).
  int direction() const { return direction_; }
  bool invertible() const { return direction_ != 0; }

  double operator()(double t) const {
    std::size_t i = segment(t);
    return hermite(i, std::clamp(t, x_[i], x_[i + 1]));
  }

  double derivative(double t) const {
    std::size_t i = segment(t);
    return hermite_slope(i, std::clamp(t, x_[i], x_[i + 1]));
  }

  /// Abscissa with value v, by bisection on the bracketing segment and a
  /// Newton polish to 1e-12.
  double inverse(double v) const {
    if (!invertible()) throw PreconditionError("sampled function is not strictly monotone; no inverse");
    const double slack = 1e-9 * (max_value() - min_value());
    if (v < min_value() - slack || v > max_value() + slack) {
      throw DomainError("inverse", "sampled function", "value " + std::to_string(v) + " outside the range");
    }
    v = std::clamp(v, min_value(), max_value());
    // Segment i with v between y_i and y_{i+1}.
    std::size_t i;
    if (direction_ > 0) {
      i = static_cast<std::size_t>(std::upper_bound(y_.begin(), y_.end(), v) - y_.begin());
    } else {
      i = static_cast<std::size_t>(std::upper_bound(y_.begin(), y_.end(), v, std::greater<double>()) - y_.begin());
    }
    i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, x_.size() - 2);
    double a = x_[i], b = x_[i + 1];
    double fa = hermite(i, a) - v;
    for (int it = 0; it < 40; ++it) {
      double m = 0.5 * (a + b);
      double fm = hermite(i, m) - v;
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    double t = 0.5 * (a + b);
    for (int it = 0; it < 8; ++it) {
      double d = hermite_slope(i, t);
      if (d == 0) break;
      double step = (hermite(i, t) - v) / d;
      double next = t - step;
      if (next < x_[i] || next > x_[i + 1]) break;
      t = next;
      if (std::fabs(step) <= 1e-12 * std::max(1.0, std::fabs(t))) break;
    }
    return t;
  }

 private:
  std::size_t segment(double t) const {
    const double slack = 1e-9 * (hi() - lo());
    if (!(t >= lo() - slack && t <= hi() + slack)) {
      throw DomainError("interpolate", "sampled function", "abscissa " + std::to_string(t) + " outside [" +
                                                               std::to_string(lo()) + ", " + std::to_string(hi()) + "]");
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
  }

  double hermite(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i], s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * dy_[i] + (-2 * s3 + 3 * s2) * y_[i + 1] +
           (s3 - s2) * h * dy_[i + 1];
  }

  double hermite_slope(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i], s = (t - x_[i]) / h;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * y_[i] + (-6 * s2 + 6 * s) * y_[i + 1]) / h + (3 * s2 - 4 * s + 1) * dy_[i] +
           (3 * s2 - 2 * s) * dy_[i + 1];
  }

  std::vector<double> x_, y_, dy_;
  int direction_ = 0;
};

/// CSV with header "x,value,slope".
inline void save_csv(const SampledFunction1D& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  out << "x,value,slope\n";
  for (std::size_t i = 0; i < f.size(); ++i) out << f.grid()[i] << ',' << f.values()[i] << ',' << f.slopes()[i] << '\n';
  if (!out) throw Error("write failed: " + path);
}

inline SampledFunction1D load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,value,slope", 0) != 0) throw ParseError("expected header 'x,value,slope' in " + path, 0);
  std::vector<double> x, y, d;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double a, b, c;
    char k1, k2;
    if (!(ss >> a >> k1 >> b >> k2 >> c) || k1 != ',' || k2 != ',') {
      throw ParseError(path + ": malformed row " + std::to_string(row), 0);
    }
    x.push_back(a);
    y.push_back(b);
    d.push_back(c);
  }
  return SampledFunction1D(std::move(x), std::move(y), std::move(d));
}

enum class RecoveryVerdict { Success, PreconditionViolated, SeparabilityFailure, NonMonotone, ResidualTooLarge };

inline const char* to_string(RecoveryVerdict v) {
  switch (v) {
    case RecoveryVerdict::Success: return "Success";
    case RecoveryVerdict::PreconditionViolated: return "PreconditionViolated";
    case RecoveryVerdict::SeparabilityFailure: return "SeparabilityFailure";
    case RecoveryVerdict::NonMonotone: return "NonMonotone";
    case RecoveryVerdict::ResidualTooLarge: return "ResidualTooLarge";
  }
  return "?";
}

struct Component {
  std::string name;
  std::string var;  // empty for the outer function
  SampledFunction1D fn;
};

/// f ~ outer(inner_1(x_1) + ... + inner_n(x_n)).
struct RecoveryResult {
  std::vector<std::string> vars;
  std::vector<double> base;
  std::vector<Component> inner;
  Component outer;
  double separability = 0;        // worst relative defect of the ratio factorization
  std::vector<double> separability_point;
  double residual = std::numeric_limits<double>::infinity();  // max |f - reconstruction|
  double relative_residual = std::numeric_limits<double>::infinity();  // residual / max(1, max |f|)
  std::vector<double> worst_point;
  int verify_grid = 0;
  RecoveryVerdict verdict = RecoveryVerdict::PreconditionViolated;
  std::string message;

  bool success() const { return verdict == RecoveryVerdict::Success; }

  double inner_sum(std::span<const double> p) const {
    double s = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) s += inner[i].fn(p[i]);
    return s;
  }
  double reconstruct(std::span<const double> p) const { return outer.fn(inner_sum(p)); }
};

struct RecoveryOptions {
  std::size_t nodes = 257;         // per inner component
  std::size_t outer_nodes = 1025;
  double quad_tol = 1e-13;         // per grid segment
  double separability_tol = 1e-6;
  double tolerance = 1e-6;         // on relative_residual
  int verify_grid = 0;             // 0: 20 per axis for three variables, 50 for two
  int check_grid = 17;             // per axis, for sign and separability scans
  bool require_special_form = true;
  unsigned threads = default_threads();
};

namespace detail {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 1) v.back() = b;
  return v;
}

/// Every point of the tensor grid with n points per axis.
template <class Body>
void for_grid(const Box& box, int n, Body&& body) {
  std::vector<std::vector<double>> axes;
  for (const auto& iv : box) axes.push_back(linspace(iv.lo, iv.hi, static_cast<std::size_t>(n)));
  std::vector<std::size_t> idx(box.size(), 0);
  std::vector<double> p(box.size());
  while (true) {
    for (std::size_t k = 0; k < box.size(); ++k) p[k] = axes[k][idx[k]];
    body(p);
    std::size_t k = 0;
    while (k < box.size() && ++idx[k] == static_cast<std::size_t>(n)) idx[k++] = 0;
    if (k == box.size()) break;
  }
}

/// Antiderivative of `rate` on [lo, hi] vanishing at `base`, sampled on `n` nodes.
template <class Rate>
SampledFunction1D antiderivative(const Rate& rate, double lo, double hi, double base, std::size_t n, double tol) {
  std::vector<double> x = linspace(lo, hi, n), y(n), d(n);
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = rate(x[i]);
    int s = (d[i] > 0) - (d[i] < 0);
    if (!std::isfinite(d[i]) || s == 0 || (sign != 0 && s != sign)) {
      throw NumericalError("integrand vanishes or changes sign near " + std::to_string(x[i]));
    }
    sign = s;
  }
  y[0] = 0;
  for (std::size_t i = 1; i < n; ++i) y[i] = y[i - 1] + integrate(rate, x[i - 1], x[i], tol);
  // Shift so the interpolant itself vanishes at the base point.
  const double shift = SampledFunction1D(x, y, d)(std::clamp(base, lo, hi));
  for (auto& v : y) v -= shift;
  return SampledFunction1D(std::move(x), std::move(y), std::move(d));
}

/// Splits t into per-component targets inside each component's range, visiting
/// components in `order`, and returns the point whose inner sum is t.
inline std::vector<double> allocate(const std::vector<Component>& inner, const std::vector<std::size_t>& order,
                                    const std::vector<double>& base, double t) {
  std::vector<double> p = base;
  double rest = t;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& fn = inner[order[k]].fn;
    // Base values are zero, so the other components contribute nothing yet.
    double v = k + 1 == order.size() ? rest : std::clamp(rest, fn.min_value(), fn.max_value());
    v = std::clamp(v, fn.min_value(), fn.max_value());
    p[order[k]] = fn.inverse(v);
    rest -= v;
  }
  return p;
}

/// Samples outer(t) = f(point with inner sum t) over the full range of the sum,
/// with slope f_i / inner_i' from the steepest component.
inline SampledFunction1D outer_from_slices(const CompiledExpr& f, const std::vector<CompiledExpr>& grad,
                                           const std::vector<Component>& inner, const std::vector<std::size_t>& order,
                                           const std::vector<double>& base, std::size_t n, unsigned threads) {
  double lo = 0, hi = 0;
  for (const auto& c : inner) {
    lo += c.fn.min_value();
    hi += c.fn.max_value();
  }
  std::vector<double> t = linspace(lo, hi, n), y(n), d(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> p = allocate(inner, order, base, t[i]);
    y[i] = f(p);
    double best = 0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
      double s = inner[k].fn.derivative(p[k]);
      if (std::fabs(s) > std::fabs(best)) {
        best = s;
        d[i] = grad[k](p) / s;
      }
    }
  });
  return SampledFunction1D(std::move(t), std::move(y), std::move(d));
}

struct Residual {
  double abs = 0, rel = 0;
  std::vector<double> worst;
};

inline Residual residual_on_grid(const CompiledExpr& f, const RecoveryResult& r, const Box& box, int n,
                                 unsigned threads) {
  std::vector<std::vector<double>> pts;
  for_grid(box, n, [&](const std::vector<double>& p) { pts.push_back(p); });
  std::vector<double> err(pts.size()), mag(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    double v = f(pts[i]);
    mag[i] = std::fabs(v);
    err[i] = std::fabs(v - r.reconstruct(pts[i]));
  });
  Residual out;
  double scale = 1;
  std::size_t w = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    scale = std::max(scale, mag[i]);
    if (!(err[i] <= out.abs)) {
      out.abs = err[i];
      w = i;
    }
  }
  out.rel = out.abs / scale;
  out.worst = pts[w];
  return out;
}

inline RecoveryResult finish(RecoveryResult r, const CompiledExpr& f, const Box& box, const RecoveryOptions& opt) {
  Residual res = residual_on_grid(f, r, box, r.verify_grid, opt.threads);
  r.residual = res.abs;
  r.relative_residual = res.rel;
  r.worst_point = res.worst;
  if (res.rel < opt.tolerance) {
    r.verdict = RecoveryVerdict::Success;
    r.message = "reconstruction within tolerance";
  } else {
    r.verdict = RecoveryVerdict::ResidualTooLarge;
    r.message = "relative residual " + std::to_string(res.rel) + " exceeds tolerance";
  }
  return r;
}

inline std::string point_str(const std::vector<double>& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + std::to_string(p[i]);
  return s + ")";
}

/// Checks each expression keeps one strict sign on the scan grid.
inline std::string sign_defect(const std::vector<CompiledExpr>& es, const std::vector<std::string>& names,
                               const Box& box, int n) {
  std::string bad;
  for (std::size_t k = 0; k < es.size() && bad.empty(); ++k) {
    int sign = 0;
    for_grid(box, n, [&](const std::vector<double>& p) {
      if (!bad.empty()) return;
      double v;
      if (es[k].try_eval(p, v) >= 0 || !std::isfinite(v) || v == 0) {
        bad = names[k] + " vanishes or is undefined at " + point_str(p);
        return;
      }
      int s = v > 0 ? 1 : -1;
      if (sign != 0 && s != sign) bad = names[k] + " changes sign near " + point_str(p);
      sign = s;
    });
  }
  return bad;
}

inline RecoveryResult precondition_failure(RecoveryResult r, std::string why) {
  r.verdict = RecoveryVerdict::PreconditionViolated;
  r.message = std::move(why);
  return r;
}

inline std::vector<double> resolve_base(const FunctionSpec& f, std::vector<double> base) {
  if (base.empty()) return box_center(f.box);
  if (base.size() != f.arity()) throw PreconditionError("base point has the wrong number of coordinates");
  if (!box_contains(f.box, base)) throw PreconditionError("base point lies outside the box");
  return base;
}

}  // namespace detail

/// f(x1, x2, x3) = G0(H1(x1) + H2(x2) + H3(x3)) with H_i(base_i) = 0.
inline RecoveryResult recover_trivariate(const FunctionSpec& f, std::vector<double> base = {},
                                         const RecoveryOptions& opt = {}) {
  f.validate();
  if (f.arity() != 3) throw PreconditionError("trivariate recovery needs three variables");
  RecoveryResult r;
  r.vars = f.vars;
  r.base = detail::resolve_base(f, std::move(base));
  r.verify_grid = opt.verify_grid > 0 ? opt.verify_grid : 20;
  if (opt.require_special_form) {
    DegeneracyReport c = classify(f);
    if (c.classification != Classification::SpecialForm) {
      return detail::precondition_failure(r, std::string("classification is ") + to_string(c.classification) +
                                                 ", not SpecialForm");
    }
  }
  const auto& v = f.vars;
  std::vector<Expr> g = {differentiate(f.expr, v[0]), differentiate(f.expr, v[1]), differentiate(f.expr, v[2])};
  std::vector<CompiledExpr> grad;
  for (const auto& e : g) grad.emplace_back(e, v);
  std::string bad = detail::sign_defect(grad, {"f_" + v[0], "f_" + v[1], "f_" + v[2]}, f.box, opt.check_grid);
  if (!bad.empty()) return detail::precondition_failure(r, bad);

  const auto& b0 = r.base;
  auto at = [&](const CompiledExpr& e, double x1, double x2, double x3) {
    const std::array<double, 3> p = {x1, x2, x3};
    return e(p);
  };
  // a = f1/f2 and b = f2/f3.
  auto a = [&](double x1, double x2, double x3) { return at(grad[0], x1, x2, x3) / at(grad[1], x1, x2, x3); };
  auto b = [&](double x1, double x2, double x3) { return at(grad[1], x1, x2, x3) / at(grad[2], x1, x2, x3); };
  const double a00 = a(b0[0], b0[1], b0[2]), b00 = b(b0[0], b0[1], b0[2]);
  detail::for_grid(f.box, opt.check_grid, [&](const std::vector<double>& p) {
    double ea = std::fabs(a(p[0], p[1], p[2]) - a(p[0], b0[1], b0[2]) * a(b0[0], p[1], b0[2]) / a00) /
                std::fabs(a(p[0], p[1], p[2]));
    double eb = std::fabs(b(p[0], p[1], p[2]) - b(b0[0], p[1], b0[2]) / b00 * b(b0[0], b0[1], p[2])) /
                std::fabs(b(p[0], p[1], p[2]));
    if (std::max(ea, eb) > r.separability) {
      r.separability = std::max(ea, eb);
      r.separability_point = p;
    }
  });
  if (r.separability > opt.separability_tol) {
    r.verdict = RecoveryVerdict::SeparabilityFailure;
    r.message = "ratio of partials does not factor; worst defect " + std::to_string(r.separability) + " at " +
                detail::point_str(r.separability_point);
    return r;
  }

  // H1' = a(s, x2^0, x3^0), H2' = a(x^0) / a(x1^0, s, x3^0), H3' = 1 / b(x1^0, x2^0, s).
  auto rate1 = [&](double s) { return a(s, b0[1], b0[2]); };
  auto rate2 = [&](double s) { return a00 / a(b0[0], s, b0[2]); };
  auto rate3 = [&](double s) { return 1 / b(b0[0], b0[1], s); };
  try {
    r.inner.push_back({"H1", v[0], detail::antiderivative(rate1, f.box[0].lo, f.box[0].hi, b0[0], opt.nodes, opt.quad_tol)});
    r.inner.push_back({"H2", v[1], detail::antiderivative(rate2, f.box[1].lo, f.box[1].hi, b0[1], opt.nodes, opt.quad_tol)});
    r.inner.push_back({"H3", v[2], detail::antiderivative(rate3, f.box[2].lo, f.box[2].hi, b0[2], opt.nodes, opt.quad_tol)});
  } catch (const NumericalError& e) {
    r.verdict = RecoveryVerdict::NonMonotone;
    r.message = e.what();
    return r;
  }
  for (const auto& c : r.inner) {
    if (!c.fn.invertible()) {
      r.verdict = RecoveryVerdict::NonMonotone;
      r.message = c.name + " is not strictly monotone";
      return r;
    }
  }
  CompiledExpr fc(f.expr, v);
  r.outer = {"G0", "", detail::outer_from_slices(fc, grad, r.inner, {1, 0, 2}, r.base, opt.outer_nodes, opt.threads)};
  return detail::finish(std::move(r), fc, f.box, opt);
}

/// f(x, y) = g(h(x) + k(y)) with h(x0) = k(y0) = 0.
inline RecoveryResult recover_bivariate(const FunctionSpec& f, std::vector<double> base = {},
                                        const RecoveryOptions& opt = {}) {
  f.validate();
  if (f.arity() != 2) throw PreconditionError("bivariate recovery needs two variables");
  RecoveryResult r;
  r.vars = f.vars;
  r.base = detail::resolve_base(f, std::move(base));
  r.verify_grid = opt.verify_grid > 0 ? opt.verify_grid : 50;
  if (opt.require_special_form) {
    DegeneracyReport c = classify(f);
    if (c.classification != Classification::SpecialForm) {
      return detail::precondition_failure(r, std::string("classification is ") + to_string(c.classification) +
                                                 ", not SpecialForm");
    }
  }
  const auto& v = f.vars;
  Expr fx = differentiate(f.expr, v[0]), fy = differentiate(f.expr, v[1]);
  std::vector<CompiledExpr> grad = {CompiledExpr(fx, v), CompiledExpr(fy, v)};
  std::string bad = detail::sign_defect(grad, {"f_" + v[0], "f_" + v[1]}, f.box, opt.check_grid);
  if (!bad.empty()) return detail::precondition_failure(r, bad);

  auto qv = [&](double x, double y) {
    const std::array<double, 2> p = {x, y};
    return grad[0](p) / grad[1](p);
  };
  const auto& b0 = r.base;
  const double q00 = qv(b0[0], b0[1]);
  // log q has zero mixed derivative iff q(x, y) q(x0, y0) = q(x, y0) q(x0, y).
  detail::for_grid(f.box, opt.check_grid, [&](const std::vector<double>& p) {
    double q = qv(p[0], p[1]);
    double e = std::fabs(q - qv(p[0], b0[1]) * qv(b0[0], p[1]) / q00) / std::fabs(q);
    if (e > r.separability) {
      r.separability = e;
      r.separability_point = p;
    }
  });
  if (r.separability > opt.separability_tol) {
    r.verdict = RecoveryVerdict::SeparabilityFailure;
    r.message = "log(f_x/f_y) is not additively separable; worst defect " + std::to_string(r.separability) + " at " +
                detail::point_str(r.separability_point);
    return r;
  }

  auto rate_h = [&](double s) { return qv(s, b0[1]); };
  auto rate_k = [&](double s) { return q00 / qv(b0[0], s); };
  try {
    r.inner.push_back({"h", v[0], detail::antiderivative(rate_h, f.box[0].lo, f.box[0].hi, b0[0], opt.nodes, opt.quad_tol)});
    r.inner.push_back({"k", v[1], detail::antiderivative(rate_k, f.box[1].lo, f.box[1].hi, b0[1], opt.nodes, opt.quad_tol)});
  } catch (const NumericalError& e) {
    r.verdict = RecoveryVerdict::NonMonotone;
    r.message = e.what();
    return r;
  }
  for (const auto& c : r.inner) {
    if (!c.fn.invertible()) {
      r.verdict = RecoveryVerdict::NonMonotone;
      r.message = c.name + " is not strictly monotone";
      return r;
    }
  }
  CompiledExpr fc(f.expr, v);
  r.outer = {"g", "", detail::outer_from_slices(fc, grad, r.inner, {1, 0}, r.base, opt.outer_nodes, opt.threads)};
  return detail::finish(std::move(r), fc, f.box, opt);
}

/// Admissible change of gauge: inner_i -> c inner_i + d_i, outer -> outer((. - sum d) / c).
inline RecoveryResult regauge(const RecoveryResult& r, double c, const std::vector<double>& d) {
  if (c == 0 || !std::isfinite(c)) throw PreconditionError("gauge scale must be finite and nonzero");
  if (d.size() != r.inner.size()) throw PreconditionError("one gauge shift per inner component");
  auto affine = [](const SampledFunction1D& fn, double scale, double shift) {
    std::vector<double> y = fn.values(), dy = fn.slopes();
    for (auto& v : y) v = scale * v + shift;
    for (auto& v : dy) v *= scale;
    return SampledFunction1D(fn.grid(), std::move(y), std::move(dy));
  };
  RecoveryResult out = r;
  double total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.inner[i].fn = affine(r.inner[i].fn, c, d[i]);
    total += d[i];
  }
  // New abscissa c t + total, same values, slopes divided by c.
  std::vector<double> t = r.outer.fn.grid(), y = r.outer.fn.values(), dy = r.outer.fn.slopes();
  for (auto& v : t) v = c * v + total;
  for (auto& v : dy) v /= c;
  if (c < 0) {
    std::reverse(t.begin(), t.end());
    std::reverse(y.begin(), y.end());
    std::reverse(dy.begin(), dy.end());
  }
  out.outer.fn = SampledFunction1D(std::move(t), std::move(y), std::move(dy));
  return out;
}

/// Recomputes the residual of `r` against f on an n-per-axis grid over f's box.
inline RecoveryResult verify_recovery(const FunctionSpec& f, RecoveryResult r, int n = 0,
                                      const RecoveryOptions& opt = {}) {
  f.validate();
  if (r.inner.size() != f.arity()) throw PreconditionError("component count does not match the function arity");
  if (n > 0) r.verify_grid = n;
  if (r.verify_grid <= 0) r.verify_grid = f.arity() == 3 ? 20 : 50;
  return detail::finish(std::move(r), CompiledExpr(f.expr, f.vars), f.box, opt);
}

}  // namespace erlab
