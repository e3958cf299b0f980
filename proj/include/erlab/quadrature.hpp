#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/expr.hpp"

namespace erlab {

namespace detail {

struct SimpsonPanel {
  double a, m, b, fa, fm, fb, flm, frm;
  double coarse, fine, err;
  bool operator<(const SimpsonPanel& o) const { return err < o.err; }
};

template <class F>
SimpsonPanel simpson_panel(const F& f, double a, double fa, double m, double fm, double b, double fb) {
  SimpsonPanel p{a, m, b, fa, fm, fb, f(0.5 * (a + m)), f(0.5 * (m + b)), 0, 0, 0};
  if (!std::isfinite(p.flm) || !std::isfinite(p.frm)) {
    throw NumericalError("quadrature: integrand is singular near " + std::to_string(m));
  }
  p.coarse = (b - a) / 6 * (fa + 4 * fm + fb);
  p.fine = (m - a) / 6 * (fa + 4 * p.flm + fm) + (b - m) / 6 * (fm + 4 * p.frm + fb);
  // Asymptotically the fine error is |fine - coarse| / 15; 10 leaves a margin.
  p.err = std::fabs(p.fine - p.coarse) / 10;
  return p;
}

}  // namespace detail

/// Globally adaptive composite Simpson: the panel with the largest error
/// estimate is bisected until the estimates sum below tol. The bisection
/// order does not depend on tol, so a smaller tol only refines further.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10) {
  if (!(a <= b)) throw PreconditionError("quadrature: lower limit exceeds upper limit");
  if (!(tol > 0)) throw PreconditionError("quadrature: tolerance must be positive");
  if (a == b) return 0;
  // Eight starting panels keep a lucky single-panel estimate from ending the loop.
  constexpr int kStart = 8;
  std::vector<double> nodes(2 * kStart + 1), values(2 * kStart + 1);
  for (int i = 0; i <= 2 * kStart; ++i) {
    nodes[static_cast<std::size_t>(i)] = i == 2 * kStart ? b : a + (b - a) * i / (2 * kStart);
    values[static_cast<std::size_t>(i)] = f(nodes[static_cast<std::size_t>(i)]);
    if (!std::isfinite(values[static_cast<std::size_t>(i)])) {
      throw NumericalError("quadrature: integrand is not finite near " + std::to_string(nodes[static_cast<std::size_t>(i)]));
    }
  }
  std::priority_queue<detail::SimpsonPanel> heap;
  double err = 0;
  for (std::size_t i = 0; i + 2 < nodes.size(); i += 2) {
    heap.push(detail::simpson_panel(f, nodes[i], values[i], nodes[i + 1], values[i + 1], nodes[i + 2], values[i + 2]));
  }
  {
    auto copy = heap;
    while (!copy.empty()) {
      err += copy.top().err;
      copy.pop();
    }
  }
  constexpr std::size_t kMaxPanels = 1u << 20;
  while (err > tol) {
    if (heap.size() >= kMaxPanels) {
      throw NumericalError("quadrature: no convergence near " + std::to_string(heap.top().m) +
                           " (integrand likely singular)");
    }
    detail::SimpsonPanel p = heap.top();
    heap.pop();
    if (p.m - p.a <= 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(p.m))) {
      throw NumericalError("quadrature: no convergence near " + std::to_string(p.m) + " (integrand likely singular)");
    }
    auto l = detail::simpson_panel(f, p.a, p.fa, 0.5 * (p.a + p.m), p.flm, p.m, p.fm);
    auto r = detail::simpson_panel(f, p.m, p.fm, 0.5 * (p.m + p.b), p.frm, p.b, p.fb);
    err += l.err + r.err - p.err;
    heap.push(l);
    heap.push(r);
    // Re-sum now and then so cancellation in the running total cannot stall the loop.
    if ((heap.size() & 1023) == 0) {
      std::vector<detail::SimpsonPanel> all;
      err = 0;
      while (!heap.empty()) {
        err += heap.top().err;
        all.push_back(heap.top());
        heap.pop();
      }
      for (auto& q : all) heap.push(q);
    }
  }
  double sum = 0;
  while (!heap.empty()) {
    sum += heap.top().fine;
    heap.pop();
  }
  return sum;
}

/// Integral of e(var) over [a, b]. The integrand is sampled first and must
/// keep one sign and stay finite there.
inline double quadrature(const Expr& e, const std::string& var, double a, double b, double tol = 1e-10) {
  if (!(a <= b)) throw PreconditionError("quadrature: lower limit exceeds upper limit");
  for (const auto& v : variables(e)) {
    if (v != var) throw PreconditionError("quadrature: integrand depends on '" + v + "' besides '" + var + "'");
  }
  CompiledExpr c(e, {var});
  auto f = [&](double s) {
    double out;
    const std::array<double, 1> p = {s};
    if (c.try_eval(p, out) >= 0) throw NumericalError("quadrature: integrand undefined at " + std::to_string(s));
    return out;
  };
  constexpr int kChecks = 256;
  int sign = 0;
  for (int i = 0; i <= kChecks; ++i) {
    double s = a + (b - a) * i / kChecks;
    double v = f(s);
    int sg = (v > 0) - (v < 0);
    if (sg == 0) continue;
    if (sign != 0 && sg != sign) throw NumericalError("quadrature: integrand changes sign near " + std::to_string(s));
    sign = sg;
  }
  return integrate(f, a, b, tol);
}

}  // namespace erlab
