#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/number.hpp"

namespace erlab {

enum class Theorem {
  BivariateAnalytic,   // f(A, B), f not a special form
  SmoothBivariate,     // general formula with alpha = 2, p = 1, beta = 1/6
  TrivariateAnalytic,  // f(A, B, C), f not a special form
  Rank,                // two-point Phi with rank of the mixed Hessian >= r
  PhongStein,          // two-point Phi with nonvanishing Monge-Ampere determinant
  KPoint,              // Gamma_m(E, F)-nondegenerate k-point Phi
  TwoPoint,            // k-point specialization with alpha = d_X + d_Y
  General,             // (alpha, p, beta) form
  DistanceSurface,     // |x - y| with y on a hypersurface of R^d
};

struct TheoremInfo {
  Theorem id;
  const char* name;
  std::vector<const char*> params;
};

inline const std::vector<TheoremInfo>& theorem_table() {
  static const std::vector<TheoremInfo> t = {
      {Theorem::BivariateAnalytic, "bivariate-analytic", {}},
      {Theorem::SmoothBivariate, "smooth-bivariate", {}},
      {Theorem::TrivariateAnalytic, "trivariate-analytic", {}},
      {Theorem::Rank, "rank", {"dX", "dY", "r"}},
      {Theorem::PhongStein, "phong-stein", {"d"}},
      {Theorem::KPoint, "k-point", {"alpha", "m"}},
      {Theorem::TwoPoint, "two-point", {"dX", "dY", "m"}},
      {Theorem::General, "general", {"alpha", "p", "beta"}},
      {Theorem::DistanceSurface, "distance-surface", {"d"}},
  };
  return t;
}

inline const TheoremInfo& theorem_info(Theorem t) {
  for (const auto& i : theorem_table()) {
    if (i.id == t) return i;
  }
  throw PreconditionError("unknown theorem");
}

inline Theorem theorem_from_name(const std::string& s) {
  for (const auto& i : theorem_table()) {
    if (s == i.name) return i.id;
  }
  std::string names;
  for (const auto& i : theorem_table()) names += std::string(names.empty() ? "" : ", ") + i.name;
  throw PreconditionError("unknown theorem '" + s + "' (expected one of: " + names + ")");
}

/// Dimension thresholds of one theorem, in exact arithmetic. The expansion
/// bound reads "sum of dims > expansion_offset + u  implies  dim image >= u".
struct ThresholdReport {
  Theorem theorem;
  std::map<std::string, Rational> params;
  std::optional<Rational> expansion_offset;
  std::optional<Rational> measure;
  std::optional<Rational> interior;
  std::vector<std::string> notes;

  std::string name() const { return theorem_info(theorem).name; }
  std::string expansion_form() const {
    return expansion_offset ? "sum > " + expansion_offset->str() + " + u" : std::string();
  }

  /// Lower bound on the image dimension for inputs whose dimensions sum to
  /// `sum`: max(sum - offset, 0), capped at the image dimension 1.
  std::optional<Rational> dimension_lower_bound(const Rational& sum) const {
    if (!expansion_offset) return std::nullopt;
    Rational b = sum - *expansion_offset;
    if (b < Rational(0)) b = Rational(0);
    if (b > Rational(1)) b = Rational(1);
    return b;
  }
};

namespace detail {

inline Rational need(const std::map<std::string, Rational>& p, const char* key) {
  auto it = p.find(key);
  if (it == p.end()) throw PreconditionError(std::string("missing parameter '") + key + "'");
  return it->second;
}

inline void require_positive_integer(const Rational& v, const char* key) {
  if (!v.is_integer() || v < Rational(1)) throw PreconditionError(std::string(key) + " must be a positive integer");
}

}  // namespace detail

/// Exact thresholds for `t` with the given parameters.
inline ThresholdReport thresholds(Theorem t, const std::map<std::string, Rational>& params = {}) {
  using detail::need;
  ThresholdReport r;
  r.theorem = t;
  const Rational half(1, 2);
  for (const char* key : theorem_info(t).params) r.params[key] = need(params, key);
  for (const auto& [k, v] : params) {
    if (!r.params.count(k)) throw PreconditionError("parameter '" + k + "' does not apply to " + theorem_info(t).name);
  }
  switch (t) {
    case Theorem::BivariateAnalytic:
      r.expansion_offset = Rational(2, 3);
      r.measure = Rational(5, 3);
      r.notes.push_back("requires f not an analytic special form");
      break;
    case Theorem::SmoothBivariate: {
      ThresholdReport g = thresholds(Theorem::General, {{"alpha", 2}, {"p", 1}, {"beta", Rational(1, 6)}});
      r.expansion_offset = g.expansion_offset;
      r.measure = g.measure;
      r.notes.push_back("general formula with alpha = 2, p = 1, beta = 1/6 (fold loss)");
      break;
    }
    case Theorem::TrivariateAnalytic: {
      ThresholdReport k = thresholds(Theorem::KPoint, {{"alpha", 3}, {"m", 0}});
      r.expansion_offset = k.expansion_offset;
      r.measure = k.measure;
      r.notes.push_back("requires f not an analytic special form and all first partials not identically zero");
      break;
    }
    case Theorem::Rank: {
      Rational dx = r.params["dX"], dy = r.params["dY"], rk = r.params["r"];
      detail::require_positive_integer(dx, "dX");
      detail::require_positive_integer(dy, "dY");
      detail::require_positive_integer(rk, "r");
      if (rk > dx || rk > dy) throw PreconditionError("r must not exceed min(dX, dY)");
      r.expansion_offset = dx + dy - rk;
      r.measure = dx + dy + Rational(1) - rk;
      r.interior = dx + dy + Rational(2) - rk;
      break;
    }
    case Theorem::PhongStein: {
      Rational d = r.params["d"];
      detail::require_positive_integer(d, "d");
      r.expansion_offset = d;
      r.measure = d + Rational(1);
      r.interior = d + Rational(2);
      r.notes.push_back("rank theorem with dX = dY = r = d");
      break;
    }
    case Theorem::KPoint: {
      Rational a = r.params["alpha"], m = r.params["m"];
      if (!a.is_integer() || !m.is_integer() || m < Rational(0)) {
        throw PreconditionError("alpha and m must be integers with m >= 0");
      }
      Rational base = a * half + m * half;
      r.expansion_offset = base - half;
      r.measure = base + half;
      r.interior = base + Rational(3, 2);
      break;
    }
    case Theorem::TwoPoint: {
      Rational dx = r.params["dX"], dy = r.params["dY"];
      detail::require_positive_integer(dx, "dX");
      detail::require_positive_integer(dy, "dY");
      ThresholdReport k = thresholds(Theorem::KPoint, {{"alpha", dx + dy}, {"m", r.params["m"]}});
      r.expansion_offset = k.expansion_offset;
      r.measure = k.measure;
      r.interior = k.interior;
      break;
    }
    case Theorem::General: {
      Rational a = r.params["alpha"], p = r.params["p"], b = r.params["beta"];
      if (!p.is_integer() || p < Rational(1)) throw PreconditionError("p must be a positive integer");
      if (a < Rational(0) || b < Rational(0)) throw PreconditionError("alpha and beta must be non-negative");
      r.expansion_offset = (a - p) * half + b;
      r.measure = (a + p + Rational(2) * b) * half;
      r.interior = (a - p) * half + Rational(2) * p + b;
      break;
    }
    case Theorem::DistanceSurface: {
      Rational d = r.params["d"];
      if (!d.is_integer() || d < Rational(2)) throw PreconditionError("d must be an integer >= 2");
      r.expansion_offset = d - Rational(1);
      r.measure = d;
      break;
    }
  }
  return r;
}

}  // namespace erlab
