#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "erlab/expr.hpp"

namespace erlab {

namespace detail {

// Canonical form used by simplify: a Laurent polynomial over "atoms".
// Atoms are variables, function applications, non-integer powers and
// multi-term polynomials that could not be divided out or expanded.
// A monomial is a sorted list of (atom id, exponent).
using Mono = std::vector<std::pair<int, int>>;
using Poly = std::map<Mono, Number>;

enum class AtomKind { Var, Func, Power, Poly };

class Canon {
 public:
  static constexpr std::size_t kExpandLimit = 4000;
  static constexpr int kDivisionSteps = 20000;

  Poly to_poly(const Expr& e) {
    switch (e.kind()) {
      case Kind::Const: return constant(e.value());
      case Kind::Var: return atom_poly(AtomKind::Var, "0" + e.name(), e, {});
      case Kind::Neg: return scale(to_poly(e.arg()), Number(-1));
      case Kind::Add: return add(to_poly(e.lhs()), to_poly(e.rhs()));
      case Kind::Sub: return add(to_poly(e.lhs()), scale(to_poly(e.rhs()), Number(-1)));
      case Kind::Mul: return mul(to_poly(e.lhs()), to_poly(e.rhs()));
      case Kind::Div: return divide(to_poly(e.lhs()), to_poly(e.rhs()));
      case Kind::Pow: return power(to_poly(e.lhs()), to_poly(e.rhs()));
      default: return function(e.kind(), to_poly(e.arg()));
    }
  }

  Expr emit(const Poly& p) {
    if (p.empty()) return Expr(0);
    std::vector<std::pair<std::vector<std::pair<std::string, int>>, const Poly::value_type*>> terms;
    terms.reserve(p.size());
    for (const auto& t : p) terms.emplace_back(keyed(t.first), &t);
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return term_before(a.first, b.first); });
    Expr out;
    bool first = true;
    for (const auto& [k, t] : terms) {
      Number c = t->second;
      bool neg = c.is_negative();
      Expr term = emit_term(t->first, neg ? -c : c);
      if (first) {
        out = neg ? -term : term;
        first = false;
      } else {
        out = neg ? out - term : out + term;
      }
    }
    return out;
  }

 private:
  struct Atom {
    AtomKind kind;
    std::string key;
    Expr expr;  // for Poly atoms: the emitted polynomial
    Poly poly;  // for Poly atoms
  };

  static Poly constant(const Number& c) {
    Poly p;
    if (!c.is_zero()) p[{}] = c;
    return p;
  }

  Poly atom_poly(AtomKind kind, const std::string& key, const Expr& e, Poly poly) {
    int id = intern(kind, key, e, std::move(poly));
    Poly p;
    p[{{id, 1}}] = Number(1);
    return p;
  }

  int intern(AtomKind kind, const std::string& key, const Expr& e, Poly poly) {
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(atoms_.size());
    atoms_.push_back({kind, key, e, std::move(poly)});
    ids_.emplace(key, id);
    return id;
  }

  static void accumulate(Poly& p, const Mono& m, const Number& c) {
    auto it = p.find(m);
    if (it == p.end()) {
      if (!c.is_zero()) p.emplace(m, c);
      return;
    }
    it->second = it->second + c;
    if (it->second.is_zero()) p.erase(it);
  }

  static Poly add(Poly a, const Poly& b) {
    for (const auto& [m, c] : b) accumulate(a, m, c);
    return a;
  }

  static Poly scale(Poly a, const Number& c) {
    if (c.is_zero()) return {};
    for (auto& t : a) t.second = t.second * c;
    return a;
  }

  static Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r;
    r.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        r.push_back(a[i++]);
      } else if (i == a.size() || b[j].first < a[i].first) {
        r.push_back(b[j++]);
      } else {
        int e = a[i].second + b[j].second;
        if (e != 0) r.emplace_back(a[i].first, e);
        ++i;
        ++j;
      }
    }
    return r;
  }

  static Mono mono_pow(const Mono& a, int k) {
    Mono r = a;
    for (auto& f : r) f.second *= k;
    return r;
  }

  Poly mul(const Poly& a, const Poly& b) {
    Poly r;
    bool poly_atom_up = false;
    for (const auto& [ma, ca] : a) {
      for (const auto& [mb, cb] : b) {
        Mono m = mono_mul(ma, mb);
        for (const auto& f : m) {
          if (f.second > 0 && atoms_[static_cast<std::size_t>(f.first)].kind == AtomKind::Poly) poly_atom_up = true;
        }
        accumulate(r, m, ca * cb);
      }
    }
    return poly_atom_up ? expand_poly_atoms(r) : r;
  }

  // A polynomial atom raised to a positive power re-expands when feasible,
  // so that the canonical form does not depend on the order of operations.
  Poly expand_poly_atoms(const Poly& p) {
    Poly out;
    for (const auto& [m, c] : p) {
      Mono rest;
      Poly factor = constant(c);
      bool changed = false;
      for (const auto& f : m) {
        const Atom& at = atoms_[static_cast<std::size_t>(f.first)];
        if (at.kind == AtomKind::Poly && f.second > 0) {
          if (auto ex = try_expand(at.poly, f.second)) {
            factor = mul_plain(factor, *ex);
            changed = true;
            continue;
          }
        }
        rest.push_back(f);
      }
      if (!changed) {
        accumulate(out, m, c);
        continue;
      }
      for (const auto& [mf, cf] : factor) accumulate(out, mono_mul(rest, mf), cf);
    }
    return out;
  }

  static Poly mul_plain(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ma, ca] : a) {
      for (const auto& [mb, cb] : b) accumulate(r, mono_mul(ma, mb), ca * cb);
    }
    return r;
  }

  static std::optional<Poly> try_expand(const Poly& base, int k) {
    if (k == 1) return base;
    Poly r = constant(Number(1));
    for (int i = 0; i < k; ++i) {
      r = mul_plain(r, base);
      if (r.size() > kExpandLimit) return std::nullopt;
    }
    return r;
  }

  static bool is_constant(const Poly& p) { return p.empty() || (p.size() == 1 && p.begin()->first.empty()); }
  static Number constant_value(const Poly& p) { return p.empty() ? Number(0) : p.begin()->second; }

  // The first term in emission order; its coefficient normalizes polynomial atoms.
  const Poly::value_type& leading(const Poly& p) {
    const Poly::value_type* best = nullptr;
    std::vector<std::pair<std::string, int>> best_key;
    for (const auto& t : p) {
      auto k = keyed(t.first);
      if (!best || term_before(k, best_key)) {
        best = &t;
        best_key = std::move(k);
      }
    }
    return *best;
  }

  Poly poly_atom(const Poly& p, int exponent) {
    Number c = leading(p).second;
    Poly normalized = scale(p, Number(1) / c);
    Expr e = emit(normalized);
    int id = intern(AtomKind::Poly, "3" + to_string(e), e, normalized);
    Poly r;
    r[{{id, exponent}}] = c.pow(exponent);
    return r;
  }

  Poly divide(const Poly& n, const Poly& d) {
    if (n.empty()) return {};
    if (d.empty()) {
      Expr e = Expr::binary(Kind::Div, emit(n), Expr(0));
      return atom_poly(AtomKind::Power, "2" + to_string(e), e, {});
    }
    if (d.size() == 1) {
      const auto& [m, c] = *d.begin();
      Poly inv;
      inv[mono_pow(m, -1)] = Number(1) / c;
      return mul(n, inv);
    }
    if (auto q = exact_divide(n, d)) return *q;
    return mul(n, poly_atom(d, -1));
  }

  // Exact multivariate division in lex order over the atoms present. Only
  // attempted for exact coefficients and non-negative exponents.
  static std::optional<Poly> exact_divide(const Poly& n, const Poly& d) {
    std::vector<int> ids;
    for (const Poly* p : {&n, &d}) {
      for (const auto& [m, c] : *p) {
        if (!c.exact()) return std::nullopt;
        for (const auto& f : m) {
          if (f.second < 0) return std::nullopt;
          ids.push_back(f.first);
        }
      }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto dense = [&](const Mono& m) {
      std::vector<int> v(ids.size(), 0);
      for (const auto& f : m) v[static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), f.first) - ids.begin())] = f.second;
      return v;
    };
    auto sparse = [&](const std::vector<int>& v) {
      Mono m;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i]) m.emplace_back(ids[i], v[i]);
      }
      return m;
    };
    using Dense = std::map<std::vector<int>, Number, std::greater<>>;
    Dense r, dd;
    for (const auto& [m, c] : n) r[dense(m)] = c;
    for (const auto& [m, c] : d) dd[dense(m)] = c;
    const auto& [dlead, dcoef] = *dd.begin();
    Poly q;
    try {
      for (int step = 0; step < kDivisionSteps; ++step) {
        if (r.empty()) return q;
        auto [rlead, rcoef] = *r.begin();
        std::vector<int> diff(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
          diff[i] = rlead[i] - dlead[i];
          if (diff[i] < 0) return std::nullopt;
        }
        Number t = rcoef / dcoef;
        if (!t.exact()) return std::nullopt;
        accumulate(q, sparse(diff), t);
        for (const auto& [dm, dc] : dd) {
          std::vector<int> m(ids.size());
          for (std::size_t i = 0; i < ids.size(); ++i) m[i] = dm[i] + diff[i];
          auto it = r.find(m);
          Number v = (it == r.end() ? Number(0) : it->second) - t * dc;
          if (!v.exact()) return std::nullopt;
          if (v.is_zero()) {
            if (it != r.end()) r.erase(it);
          } else if (it == r.end()) {
            r.emplace(m, v);
          } else {
            it->second = v;
          }
        }
        if (r.size() > kExpandLimit) return std::nullopt;
      }
    } catch (const std::exception&) {
      return std::nullopt;
    }
    return std::nullopt;
  }

  Poly power(const Poly& b, const Poly& e) {
    if (is_constant(e)) {
      Number k = constant_value(e);
      if (k.is_integer() && k.rational().num() >= -1000000 && k.rational().num() <= 1000000) {
        int n = k.rational().num().convert_to<int>();
        if (n == 0) return constant(Number(1));
        if (n == 1) return b;
        if (b.empty()) {
          if (n > 0) return {};
        } else if (b.size() == 1) {
          const auto& [m, c] = *b.begin();
          Poly r;
          r[mono_pow(m, n)] = c.pow(n);
          return r.begin()->second.is_zero() ? Poly{} : (contains_poly_atom_up(r) ? expand_poly_atoms(r) : r);
        } else if (n > 0) {
          if (auto ex = try_expand(b, n)) return *ex;
          return poly_atom(b, n);
        } else {
          return poly_atom(b, n);
        }
      } else if (is_constant(b) && !constant_value(b).exact() && !k.exact()) {
        double v = std::pow(constant_value(b).value(), k.value());
        if (std::isfinite(v)) return constant(Number::inexact(v));
      }
    }
    Expr x = pow(emit(b), emit(e));
    return atom_poly(AtomKind::Power, "2" + to_string(x), x, {});
  }

  bool contains_poly_atom_up(const Poly& p) const {
    for (const auto& [m, c] : p) {
      for (const auto& f : m) {
        if (f.second > 0 && atoms_[static_cast<std::size_t>(f.first)].kind == AtomKind::Poly) return true;
      }
    }
    return false;
  }

  static std::optional<Rational> exact_sqrt(const Rational& q) {
    if (q.sign() < 0) return std::nullopt;
    Rational::Int n = boost::multiprecision::sqrt(q.num()), d = boost::multiprecision::sqrt(q.den());
    if (n * n != q.num() || d * d != q.den()) return std::nullopt;
    return Rational(n, d);
  }

  Poly function(Kind k, const Poly& arg) {
    if (is_constant(arg)) {
      Number c = constant_value(arg);
      if (c.is_zero() && (k == Kind::Sin || k == Kind::Sqrt)) return {};
      if (c.is_zero() && (k == Kind::Cos || k == Kind::Exp)) return constant(Number(1));
      if (c.is_one() && c.exact() && k == Kind::Log) return {};
      if (k == Kind::Sqrt && c.exact()) {
        if (auto r = exact_sqrt(c.rational())) return constant(Number(*r));
      }
    }
    if (k == Kind::Log && arg.size() == 1) {
      const auto& [m, c] = *arg.begin();
      if (c.is_one() && m.size() == 1 && m[0].second == 1) {
        const Atom& at = atoms_[static_cast<std::size_t>(m[0].first)];
        if (at.kind == AtomKind::Func && at.expr.kind() == Kind::Exp) return to_poly(at.expr.arg());
      }
    }
    Expr e = Expr::unary(k, emit(arg));
    return atom_poly(AtomKind::Func, "1" + to_string(e), e, {});
  }

  std::vector<std::pair<std::string, int>> keyed(const Mono& m) const {
    std::vector<std::pair<std::string, int>> k;
    k.reserve(m.size());
    for (const auto& f : m) k.emplace_back(atoms_[static_cast<std::size_t>(f.first)].key, f.second);
    std::sort(k.begin(), k.end());
    return k;
  }

  // Higher total degree first, then by atom key, larger exponents first.
  static bool term_before(const std::vector<std::pair<std::string, int>>& a,
                          const std::vector<std::pair<std::string, int>>& b) {
    int da = 0, db = 0;
    for (const auto& f : a) da += f.second;
    for (const auto& f : b) db += f.second;
    if (da != db) return da > db;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i].first != b[i].first) return a[i].first < b[i].first;
      if (a[i].second != b[i].second) return a[i].second > b[i].second;
    }
    return a.size() > b.size();
  }

  Expr emit_term(const Mono& m, const Number& c) {
    std::vector<std::pair<std::string, std::pair<const Atom*, int>>> fs;
    for (const auto& f : m) {
      const Atom& at = atoms_[static_cast<std::size_t>(f.first)];
      fs.push_back({at.key, {&at, f.second}});
    }
    std::sort(fs.begin(), fs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Expr> num, den;
    for (const auto& [key, af] : fs) {
      const auto& [at, e] = af;
      if (at->kind == AtomKind::Poly) {
        num.push_back(pow(at->expr, Expr(e)));
      } else if (e > 0) {
        num.push_back(e == 1 ? at->expr : pow(at->expr, Expr(e)));
      } else {
        den.push_back(e == -1 ? at->expr : pow(at->expr, Expr(-e)));
      }
    }
    Expr top;
    bool have = false;
    if (!c.is_one() || num.empty()) {
      top = Expr(c);
      have = true;
    }
    for (const auto& f : num) {
      top = have ? top * f : f;
      have = true;
    }
    if (den.empty()) return top;
    Expr bottom = den[0];
    for (std::size_t i = 1; i < den.size(); ++i) bottom = bottom * den[i];
    return top / bottom;
  }

  std::vector<Atom> atoms_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace detail

/// Bounded canonicalization: constant folding, 0/1 identities, like-term
/// collection, monomial cancellation and exact polynomial division.
/// Idempotent.
inline Expr simplify(const Expr& e) {
  detail::Canon c;
  return c.emit(c.to_poly(e));
}

inline bool depends_on(const Expr& e, const std::string& v) {
  switch (e.kind()) {
    case Kind::Const: return false;
    case Kind::Var: return e.name() == v;
    default: break;
  }
  if (is_unary(e.kind())) return depends_on(e.arg(), v);
  return depends_on(e.lhs(), v) || depends_on(e.rhs(), v);
}

namespace detail {

inline Expr derive(const Expr& e, const std::string& v) {
  if (!depends_on(e, v)) return Expr(0);
  switch (e.kind()) {
    case Kind::Var: return Expr(1);
    case Kind::Neg: return -derive(e.arg(), v);
    case Kind::Add: return derive(e.lhs(), v) + derive(e.rhs(), v);
    case Kind::Sub: return derive(e.lhs(), v) - derive(e.rhs(), v);
    case Kind::Mul: return derive(e.lhs(), v) * e.rhs() + e.lhs() * derive(e.rhs(), v);
    case Kind::Div:
      return (derive(e.lhs(), v) * e.rhs() - e.lhs() * derive(e.rhs(), v)) / pow(e.rhs(), Expr(2));
    case Kind::Sin: return cos(e.arg()) * derive(e.arg(), v);
    case Kind::Cos: return -(sin(e.arg()) * derive(e.arg(), v));
    case Kind::Exp: return e * derive(e.arg(), v);
    case Kind::Log: return derive(e.arg(), v) / e.arg();
    case Kind::Sqrt: return derive(e.arg(), v) / (Expr(2) * e);
    case Kind::Pow: {
      const Expr& a = e.lhs();
      const Expr& b = e.rhs();
      if (!depends_on(b, v)) return b * pow(a, b - Expr(1)) * derive(a, v);
      // a^b = exp(b log a); valid where a > 0.
      return e * (derive(b, v) * log(a) + b * derive(a, v) / a);
    }
    default: return Expr(0);
  }
}

}  // namespace detail

/// Exact symbolic partial derivative, simplified.
inline Expr differentiate(const Expr& e, const std::string& v) { return simplify(detail::derive(e, v)); }

}  // namespace erlab
