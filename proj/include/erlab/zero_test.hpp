#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "erlab/expr.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/random.hpp"
#include "erlab/simplify.hpp"

namespace erlab {

struct ZeroPolicy {
  bool symbolic_first = true;
  int samples = 64;
  double rel_tol = 1e-9;
  std::uint64_t seed = 0;
};

struct ZeroResult {
  enum class Verdict { Zero, Nonzero, Undeterminable };
  Verdict verdict = Verdict::Undeterminable;
  bool symbolic = false;        // decided by simplification alone
  std::vector<double> witness;  // point of largest |e| among samples
  double value = 0;
  double scale = 0;
  int evaluated = 0;
  int domain_failures = 0;

  bool zero() const { return verdict == Verdict::Zero; }
  bool nonzero() const { return verdict == Verdict::Nonzero; }
};

namespace detail {

// Value and absolute-value surrogate: the surrogate replaces every sum by the
// sum of absolute values, so cancellation in e does not shrink it.
struct Surrogate {
  double value;
  double magnitude;
};

inline std::optional<Surrogate> surrogate(const Expr& e, const std::unordered_map<std::string, double>& at) {
  auto finite = [](double v) { return std::isfinite(v); };
  switch (e.kind()) {
    case Kind::Const: {
      double v = e.value().value();
      return Surrogate{v, std::fabs(v)};
    }
    case Kind::Var: {
      double v = at.at(e.name());
      return Surrogate{v, std::fabs(v)};
    }
    default: break;
  }
  if (is_unary(e.kind())) {
    auto a = surrogate(e.arg(), at);
    if (!a) return std::nullopt;
    double v;
    switch (e.kind()) {
      case Kind::Neg: return Surrogate{-a->value, a->magnitude};
      case Kind::Sin: v = std::sin(a->value); break;
      case Kind::Cos: v = std::cos(a->value); break;
      case Kind::Exp: v = std::exp(a->value); break;
      case Kind::Log:
        if (!(a->value > 0)) return std::nullopt;
        v = std::log(a->value);
        break;
      default:
        if (!(a->value >= 0)) return std::nullopt;
        v = std::sqrt(a->value);
        break;
    }
    if (!finite(v)) return std::nullopt;
    return Surrogate{v, std::fabs(v)};
  }
  auto a = surrogate(e.lhs(), at);
  auto b = surrogate(e.rhs(), at);
  if (!a || !b) return std::nullopt;
  Surrogate r{};
  switch (e.kind()) {
    case Kind::Add: r = {a->value + b->value, a->magnitude + b->magnitude}; break;
    case Kind::Sub: r = {a->value - b->value, a->magnitude + b->magnitude}; break;
    case Kind::Mul: r = {a->value * b->value, a->magnitude * b->magnitude}; break;
    case Kind::Div:
      if (b->value == 0) return std::nullopt;
      r = {a->value / b->value, a->magnitude / std::fabs(b->value)};
      break;
    default: {
      double base = a->value, ex = b->value;
      if ((base < 0 && ex != std::floor(ex)) || (base == 0 && ex < 0)) return std::nullopt;
      double v = std::pow(base, ex);
      r = {v, ex > 0 ? std::pow(a->magnitude, ex) : std::fabs(v)};
      break;
    }
  }
  if (!finite(r.value) || !finite(r.magnitude)) return std::nullopt;
  return r;
}

}  // namespace detail

/// Decides whether `e` vanishes identically on `box`: symbolically when
/// simplification reaches the zero constant, otherwise by random sampling
/// against a relative tolerance scaled by the median absolute-value surrogate.
inline ZeroResult is_identically_zero(const Expr& e, const std::vector<std::string>& vars, const Box& box,
                                      const ZeroPolicy& policy = {}) {
  if (box.empty() && !vars.empty()) throw PreconditionError("empty box");
  if (policy.samples < 1) throw PreconditionError("samples must be at least 1");
  ZeroResult r;
  if (policy.symbolic_first && simplify(e).is_zero()) {
    r.verdict = ZeroResult::Verdict::Zero;
    r.symbolic = true;
    return r;
  }
  CompiledExpr ce(e, vars);
  auto g = rng_stream(policy.seed, 0x7a65726fULL);
  std::vector<double> mags;
  double best = -1;
  for (int s = 0; s < policy.samples; ++s) {
    std::vector<double> p = sample_box(box, g);
    double v = 0;
    if (ce.try_eval(p, v) >= 0) {
      ++r.domain_failures;
      continue;
    }
    std::unordered_map<std::string, double> at;
    for (std::size_t i = 0; i < vars.size(); ++i) at[vars[i]] = p[i];
    auto sg = detail::surrogate(e, at);
    if (sg) mags.push_back(sg->magnitude);
    ++r.evaluated;
    if (std::fabs(v) > best) {
      best = std::fabs(v);
      r.witness = p;
      r.value = v;
    }
  }
  if (r.evaluated == 0) {
    r.verdict = ZeroResult::Verdict::Undeterminable;
    return r;
  }
  if (!mags.empty()) {
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
    r.scale = mags[mags.size() / 2];
  }
  bool zero = r.scale > 0 ? best < policy.rel_tol * r.scale : best == 0.0;
  r.verdict = zero ? ZeroResult::Verdict::Zero : ZeroResult::Verdict::Nonzero;
  return r;
}

inline ZeroResult is_identically_zero(const FunctionSpec& f, const ZeroPolicy& policy = {}) {
  return is_identically_zero(f.expr, f.vars, f.box, policy);
}

}  // namespace erlab
