#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "erlab/degeneracy.hpp"
#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/parallel.hpp"
#include "erlab/simplify.hpp"

namespace erlab {

/// A configuration (x, y', x', theta) on the incidence relation of f.
struct FoldConfig {
  double x = 0, yp = 0, xp = 0, theta = 1;
};

struct FoldOptions {
  double h_rel = 1e-5;           // central-difference step, fraction of box width
  double newton_tol = 1e-12;
  int newton_steps = 50;
  double dx_rel_tol = 1e-4;      // d/dx det against -theta (f_xy/f_y)^2 kappa
  double det_tol = 1e-9;         // closed-form det at the critical configuration
  double fd_det_tol = 1e-6;      // 4x4 difference Jacobian det at the critical configuration
  double transversal_tol = 1e-8; // |f_y / f_xy|
  double kappa_tol = 1e-10;      // relative to |f_x rho_y| + |f_y rho_x|
  double kernel_tol = 1e-5;      // sine of the angle between numeric and predicted kernels
  double probe_offset = 0.05;    // x' - x for the off-diagonal agreement probe, fraction of width
};

/// Compiled derivatives of a bivariate f used by all fold computations.
class FoldModel {
 public:
  explicit FoldModel(const FunctionSpec& f, FoldOptions opt = {}) : spec_(f), opt_(opt) {
    f.validate();
    if (f.arity() != 2) throw PreconditionError("fold geometry needs a function of two variables");
    Partials2 p = partials2(f);
    Expr fxx = differentiate(p.fx, f.vars[0]);
    Expr fyy = differentiate(p.fy, f.vars[1]);
    f_ = CompiledExpr(f.expr, f.vars);
    fx_ = CompiledExpr(p.fx, f.vars);
    fy_ = CompiledExpr(p.fy, f.vars);
    fxy_ = CompiledExpr(p.fxy, f.vars);
    fxx_ = CompiledExpr(fxx, f.vars);
    fyy_ = CompiledExpr(fyy, f.vars);
    fxy_zero_ = is_identically_zero(p.fxy, f.vars, f.box).zero();
    if (!fxy_zero_) {
      KappaParts k = kappa_parts(f);
      kappa_expr_ = erlab::kappa(f);
      kappa_ = CompiledExpr(kappa_expr_, f.vars);
      kappa_scale_a_ = CompiledExpr(k.first / k.denom, f.vars);
      kappa_scale_b_ = CompiledExpr(k.second / k.denom, f.vars);
    }
  }

  const FunctionSpec& spec() const { return spec_; }
  const FoldOptions& options() const { return opt_; }
  bool fxy_identically_zero() const { return fxy_zero_; }
  const Expr& kappa_expr() const { return kappa_expr_; }

  double f(double x, double y) const { return at(f_, x, y); }
  double fx(double x, double y) const { return at(fx_, x, y); }
  double fy(double x, double y) const { return at(fy_, x, y); }
  double fxy(double x, double y) const { return at(fxy_, x, y); }
  double fxx(double x, double y) const { return at(fxx_, x, y); }
  double fyy(double x, double y) const { return at(fyy_, x, y); }
  double rho(double x, double y) const { return fx(x, y) * fy(x, y) / fxy(x, y); }
  double kappa(double x, double y) const {
    if (fxy_zero_) throw AdditivelyDegenerate("f_xy vanishes identically; kappa is undefined");
    return at(kappa_, x, y);
  }
  double kappa_scale(double x, double y) const {
    return std::fabs(at(kappa_scale_a_, x, y)) + std::fabs(at(kappa_scale_b_, x, y));
  }

  double hx() const { return opt_.h_rel * spec_.box[0].width(); }
  double hy() const { return opt_.h_rel * spec_.box[1].width(); }

  /// Newton solve of f(x, y) = f(x', y') for y, started at `guess`.
  double phi(double x, double yp, double xp, double guess) const {
    const double target = f(xp, yp);
    const double scale = std::max(1.0, std::fabs(target));
    double y = guess;
    for (int it = 0; it <= opt_.newton_steps; ++it) {
      double r = f(x, y) - target;
      if (std::fabs(r) < opt_.newton_tol * scale) return y;
      if (it == opt_.newton_steps) break;
      double d = fy(x, y);
      if (std::fabs(d) < 1e-10) {
        throw NumericalError("implicit solve: |f_y| = " + fmt(std::fabs(d)) + " below 1e-10 at y = " + fmt(y));
      }
      y -= r / d;
      if (!std::isfinite(y)) break;
    }
    throw NumericalError("implicit solve: Newton did not converge in " + std::to_string(opt_.newton_steps) +
                         " steps (x = " + fmt(x) + ", y' = " + fmt(yp) + ", x' = " + fmt(xp) + ")");
  }

  /// theta f_xy(x, phi) f_xy(x', y') / f_y(x, phi) * [rho(x, phi) - rho(x', y')].
  double det_closed(const FoldConfig& c, double phi_value) const {
    double fy1 = fy(c.x, phi_value), fxy1 = fxy(c.x, phi_value), fxy2 = fxy(c.xp, c.yp);
    if (fy1 == 0 || fxy1 == 0 || fxy2 == 0) {
      throw NumericalError("det Dg: f_y or f_xy vanishes on the configuration");
    }
    return c.theta * fxy1 * fxy2 / fy1 * (rho(c.x, phi_value) - rho(c.xp, c.yp));
  }
  double det_closed(const FoldConfig& c) const { return det_closed(c, phi(c.x, c.yp, c.xp, c.yp)); }

  /// g(x, y', x', theta) = (x, y', theta f_x(x, phi), -theta f_y(x', y')).
  std::array<double, 4> g(const FoldConfig& c, double guess) const {
    double p = phi(c.x, c.yp, c.xp, guess);
    return {c.x, c.yp, c.theta * fx(c.x, p), -c.theta * fy(c.xp, c.yp)};
  }

  /// Central-difference Jacobian of g, columns ordered (x, y', x', theta).
  Eigen::Matrix4d dg_numeric(const FoldConfig& c) const {
    const double guess = phi(c.x, c.yp, c.xp, c.yp);
    const double h[4] = {hx(), hy(), hx(), opt_.h_rel * std::max(1.0, std::fabs(c.theta))};
    Eigen::Matrix4d J;
    for (int k = 0; k < 4; ++k) {
      FoldConfig a = c, b = c;
      shift(a, k, h[k]);
      shift(b, k, -h[k]);
      auto ga = g(a, guess), gb = g(b, guess);
      for (int i = 0; i < 4; ++i) J(i, k) = (ga[static_cast<std::size_t>(i)] - gb[static_cast<std::size_t>(i)]) / (2 * h[k]);
    }
    return J;
  }

 private:
  static double at(const CompiledExpr& e, double x, double y) {
    const std::array<double, 2> p = {x, y};
    return e(p);
  }
  static void shift(FoldConfig& c, int k, double h) {
    if (k == 0) c.x += h;
    if (k == 1) c.yp += h;
    if (k == 2) c.xp += h;
    if (k == 3) c.theta += h;
  }
  static std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
  }

  FunctionSpec spec_;
  FoldOptions opt_;
  CompiledExpr f_, fx_, fy_, fxy_, fxx_, fyy_, kappa_, kappa_scale_a_, kappa_scale_b_;
  Expr kappa_expr_{0};
  bool fxy_zero_ = false;
};

inline double implicit_phi(const FunctionSpec& f, double x, double yp, double xp, double y_guess) {
  return FoldModel(f).phi(x, yp, xp, y_guess);
}

/// Max relative error (floored at 1e-6 in the denominator) between difference
/// partials of phi and -f_x/f_y, f_y(x',y')/f_y, f_x(x',y')/f_y at (x, y', x').
inline double phi_partials_check(const FoldModel& m, double x, double yp, double xp) {
  const double p = m.phi(x, yp, xp, yp);
  const double hx = m.hx(), hy = m.hy();
  auto ph = [&](double a, double b, double c) { return m.phi(a, b, c, p); };
  const double d_x = (ph(x + hx, yp, xp) - ph(x - hx, yp, xp)) / (2 * hx);
  const double d_yp = (ph(x, yp + hy, xp) - ph(x, yp - hy, xp)) / (2 * hy);
  const double d_xp = (ph(x, yp, xp + hx) - ph(x, yp, xp - hx)) / (2 * hx);
  const double fy1 = m.fy(x, p);
  const double want[3] = {-m.fx(x, p) / fy1, m.fy(xp, yp) / fy1, m.fx(xp, yp) / fy1};
  const double got[3] = {d_x, d_yp, d_xp};
  double worst = 0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::fabs(got[i] - want[i]) / std::max(std::fabs(want[i]), 1e-6));
  return worst;
}

inline double phi_partials_check(const FunctionSpec& f, double x, double yp, double xp) {
  return phi_partials_check(FoldModel(f), x, yp, xp);
}

inline double det_Dg(const FunctionSpec& f, double x, double yp, double xp, double theta = 1) {
  return FoldModel(f).det_closed({x, yp, xp, theta});
}

/// Determinant of the difference Jacobian of g.
inline double det_Dg_numeric(const FunctionSpec& f, double x, double yp, double xp, double theta = 1) {
  return FoldModel(f).dg_numeric({x, yp, xp, theta}).determinant();
}

enum class FoldVerdict { FoldVerified, Degenerate };

inline const char* to_string(FoldVerdict v) { return v == FoldVerdict::FoldVerified ? "FoldVerified" : "Degenerate"; }

struct FoldReport {
  double x0 = 0, y0 = 0, theta = 1;
  double fx = 0, fy = 0, fxy = 0, kappa = 0;
  double det_residual = 0;      // closed form at (x0, y0, x0, theta)
  double det_residual_fd = 0;   // difference Jacobian at the same point
  FoldConfig probe;             // off-diagonal configuration for the agreement check
  double det_probe = 0, det_probe_fd = 0, det_agreement = 0;
  double dx_det_fd = 0, dx_det_predicted = 0, dx_rel_error = 0;
  double transversality = 0;    // f_y / f_xy
  std::array<double, 4> kernel_predicted{};  // (0, 0, -f_y/(theta f_xy), 1), normalized
  std::array<double, 4> kernel_numeric{};
  double kernel_error = 0;      // |sin| of the angle between the two
  FoldVerdict verdict = FoldVerdict::Degenerate;
  std::string reason;

  bool verified() const { return verdict == FoldVerdict::FoldVerified; }
};

namespace detail {

inline FoldReport degenerate(FoldReport r, std::string why) {
  r.verdict = FoldVerdict::Degenerate;
  r.reason = std::move(why);
  return r;
}

}  // namespace detail

/// Fold checks at the critical configuration (x0, y0, x0, theta).
inline FoldReport fold_verify(const FoldModel& m, double x0, double y0, double theta = 1) {
  const FoldOptions& o = m.options();
  FoldReport r;
  r.x0 = x0;
  r.y0 = y0;
  r.theta = theta;
  if (m.fxy_identically_zero()) return detail::degenerate(r, "f_xy=0 (additively separable)");
  r.fx = m.fx(x0, y0);
  r.fy = m.fy(x0, y0);
  r.fxy = m.fxy(x0, y0);
  if (r.fxy == 0) return detail::degenerate(r, "f_xy=0 at base");
  if (r.fy == 0) return detail::degenerate(r, "f_y=0 at base");
  r.kappa = m.kappa(x0, y0);
  r.transversality = r.fy / r.fxy;
  if (std::fabs(r.kappa) <= o.kappa_tol * std::max(1.0, m.kappa_scale(x0, y0))) {
    return detail::degenerate(r, "kappa=0");
  }

  const FoldConfig crit{x0, y0, x0, theta};
  r.det_residual = m.det_closed(crit);
  Eigen::Matrix4d J = m.dg_numeric(crit);
  r.det_residual_fd = J.determinant();

  const double off = o.probe_offset * m.spec().box[0].width();
  r.probe = {x0, y0, x0 + (x0 + off <= m.spec().box[0].hi ? off : -off), theta};
  r.det_probe = m.det_closed(r.probe);
  r.det_probe_fd = m.dg_numeric(r.probe).determinant();
  r.det_agreement = std::fabs(r.det_probe - r.det_probe_fd) / std::max(std::fabs(r.det_probe), 1e-300);

  const double h = m.hx();
  // x' and y' stay at the base while x moves off the diagonal.
  FoldConfig a = crit, b = crit;
  a.x += h;
  b.x -= h;
  r.dx_det_fd = (m.det_closed(a) - m.det_closed(b)) / (2 * h);
  const double q = r.fxy / r.fy;
  r.dx_det_predicted = -theta * q * q * r.kappa;
  r.dx_rel_error = std::fabs(r.dx_det_fd - r.dx_det_predicted) / std::fabs(r.dx_det_predicted);

  // Solving the last row of Dg v = 0 with v_x = v_y' = 0 gives v_x' = -f_y tau / (theta f_xy).
  Eigen::Vector4d kp(0, 0, -r.fy / (theta * r.fxy), 1);
  kp.normalize();
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(J, Eigen::ComputeFullV);
  Eigen::Vector4d kn = svd.matrixV().col(3);
  if (kn.dot(kp) < 0) kn = -kn;
  r.kernel_error = std::sqrt(std::max(0.0, 1 - std::pow(kn.dot(kp), 2)));
  for (int i = 0; i < 4; ++i) {
    r.kernel_predicted[static_cast<std::size_t>(i)] = kp(i);
    r.kernel_numeric[static_cast<std::size_t>(i)] = kn(i);
  }

  const double grad_scale = std::fabs(r.dx_det_predicted) * h;
  if (std::fabs(r.det_residual) >= o.det_tol * std::max(1.0, std::fabs(r.det_probe))) {
    return detail::degenerate(r, "det Dg does not vanish on the diagonal");
  }
  if (std::fabs(r.det_residual_fd) >= std::max(o.fd_det_tol, grad_scale)) {
    return detail::degenerate(r, "difference Jacobian is not singular on the diagonal");
  }
  if (r.dx_rel_error >= o.dx_rel_tol) return detail::degenerate(r, "d/dx det Dg disagrees with the kappa prediction");
  if (std::fabs(r.transversality) <= o.transversal_tol) return detail::degenerate(r, "kernel tangent to the critical set");
  if (r.kernel_error >= o.kernel_tol) return detail::degenerate(r, "numeric kernel differs from the predicted direction");
  r.verdict = FoldVerdict::FoldVerified;
  r.reason = "fold";
  return r;
}

inline FoldReport fold_verify(const FunctionSpec& f, double x0, double y0, double theta = 1, FoldOptions opt = {}) {
  return fold_verify(FoldModel(f, opt), x0, y0, theta);
}

/// Fold checks at the classifier's witness; Degenerate for special forms.
inline FoldReport fold_verify(const FunctionSpec& f, double theta = 1, FoldOptions opt = {}) {
  DegeneracyReport c = classify(f);
  if (c.classification != Classification::Expanding || c.witness_point.size() != 2) {
    FoldReport r;
    r.theta = theta;
    auto mid = box_center(f.box);
    r.x0 = mid[0];
    r.y0 = mid[1];
    return detail::degenerate(r, std::string("not expanding: ") + to_string(c.classification) +
                                     (c.reason.empty() ? "" : " (" + c.reason + ")"));
  }
  return fold_verify(f, c.witness_point[0], c.witness_point[1], theta, opt);
}

/// Fold checks at many base points, in parallel.
inline std::vector<FoldReport> fold_verify_batch(const FoldModel& m, const std::vector<std::array<double, 2>>& bases,
                                                 double theta = 1, unsigned threads = default_threads()) {
  std::vector<FoldReport> out(bases.size());
  parallel_for(bases.size(), threads, [&](std::size_t i) { out[i] = fold_verify(m, bases[i][0], bases[i][1], theta); });
  return out;
}

}  // namespace erlab
