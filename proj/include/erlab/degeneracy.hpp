#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/matrix.hpp"
#include "erlab/parallel.hpp"
#include "erlab/random.hpp"
#include "erlab/simplify.hpp"
#include "erlab/zero_test.hpp"

namespace erlab {

/// f_xy vanishes identically, so f = h(x) + k(y) on the box and rho is undefined.
class AdditivelyDegenerate : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// ---------------------------------------------------------------------------
// Bivariate certificates

struct Partials2 {
  Expr fx, fy, fxy;
};

inline Partials2 partials2(const FunctionSpec& f) {
  if (f.arity() != 2) throw PreconditionError("expected a function of two variables");
  Expr fx = differentiate(f.expr, f.vars[0]);
  Expr fy = differentiate(f.expr, f.vars[1]);
  return {fx, fy, differentiate(fx, f.vars[1])};
}

/// rho = f_x f_y / f_xy.
inline Expr rho(const FunctionSpec& f, const ZeroPolicy& policy = {}) {
  Partials2 p = partials2(f);
  if (is_identically_zero(p.fxy, f.vars, f.box, policy).zero()) {
    throw AdditivelyDegenerate("f_xy vanishes identically: f is additively separable on the box");
  }
  return simplify(p.fx * p.fy / p.fxy);
}

/// With rho = N / D (N = f_x f_y, D = f_xy):
/// kappa = [f_x (N_y D - N D_y) - f_y (N_x D - N D_x)] / D^2 = (first - second) / denom.
/// Keeping the numerator polynomial avoids nested quotients that swell under
/// differentiation.
struct KappaParts {
  Expr first, second, denom;
};

inline KappaParts kappa_parts(const FunctionSpec& f, const ZeroPolicy& policy = {}) {
  Partials2 p = partials2(f);
  if (is_identically_zero(p.fxy, f.vars, f.box, policy).zero()) {
    throw AdditivelyDegenerate("f_xy vanishes identically: f is additively separable on the box");
  }
  const auto& x = f.vars[0];
  const auto& y = f.vars[1];
  Expr n = simplify(p.fx * p.fy);
  Expr nx = differentiate(n, x), ny = differentiate(n, y);
  Expr dx = differentiate(p.fxy, x), dy = differentiate(p.fxy, y);
  return {simplify(p.fx * (ny * p.fxy - n * dy)), simplify(p.fy * (nx * p.fxy - n * dx)),
          simplify(p.fxy * p.fxy)};
}

/// kappa = f_x rho_y - f_y rho_x. `flip` negates the wedge orientation.
inline Expr kappa(const FunctionSpec& f, bool flip = false, const ZeroPolicy& policy = {}) {
  KappaParts k = kappa_parts(f, policy);
  Expr num = simplify(k.first - k.second);
  if (num.is_zero()) return Expr(0);
  Expr out = simplify(num / k.denom);
  return flip ? simplify(-out) : out;
}

// ---------------------------------------------------------------------------
// Trivariate certificates

struct Auxiliary3 {
  Expr g1, g2, g3;
};

/// G1 = f3 f12 - f13 f2, G2 = f3 f12 - f23 f1, G3 = f1 f23 - f13 f2.
inline Auxiliary3 aux_trivariate(const FunctionSpec& f) {
  if (f.arity() != 3) throw PreconditionError("expected a function of three variables");
  const auto& v = f.vars;
  Expr f1 = differentiate(f.expr, v[0]), f2 = differentiate(f.expr, v[1]), f3 = differentiate(f.expr, v[2]);
  Expr f12 = differentiate(f1, v[1]), f13 = differentiate(f1, v[2]), f23 = differentiate(f2, v[2]);
  return {simplify(f3 * f12 - f13 * f2), simplify(f3 * f12 - f23 * f1), simplify(f1 * f23 - f13 * f2)};
}

// ---------------------------------------------------------------------------
// Matrices over variable groups

/// Variable indices of each group of a k-point function.
using Groups = std::vector<std::vector<std::size_t>>;

/// One variable per group.
inline Groups singleton_groups(std::size_t n) {
  Groups g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = {i};
  return g;
}

/// Two groups: the first dx variables and the rest.
inline Groups two_point_groups(std::size_t dx, std::size_t n) {
  if (dx == 0 || dx >= n) throw PreconditionError("two-point split needs both groups nonempty");
  Groups g(2);
  for (std::size_t i = 0; i < n; ++i) g[i < dx ? 0 : 1].push_back(i);
  return g;
}

inline std::string primed(const std::string& v) { return v + "'"; }

/// The same expression over primed copies of `vars`.
inline Expr primed_copy(const Expr& e, const std::vector<std::string>& vars) {
  std::map<std::string, Expr> m;
  for (const auto& v : vars) m.emplace(v, var(primed(v)));
  return substitute(e, m);
}

inline ExprMatrix mixed_hessian(const Expr& phi, const std::vector<std::string>& row_vars,
                                const std::vector<std::string>& col_vars) {
  if (row_vars.empty() || col_vars.empty()) throw PreconditionError("mixed Hessian of an empty index set");
  ExprMatrix h(row_vars.size(), col_vars.size());
  for (std::size_t i = 0; i < row_vars.size(); ++i) {
    Expr d = differentiate(phi, row_vars[i]);
    for (std::size_t j = 0; j < col_vars.size(); ++j) h(i, j) = differentiate(d, col_vars[j]);
  }
  return h;
}

namespace detail {

inline void check_index_set(const Groups& g, const std::vector<std::size_t>& s, const char* name) {
  if (s.empty()) throw PreconditionError(std::string("index set ") + name + " is empty");
  std::vector<std::size_t> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw PreconditionError(std::string("index set ") + name + " has repeated groups");
  }
  if (sorted.back() >= g.size()) {
    throw PreconditionError(std::string("index set ") + name + " names group " + std::to_string(sorted.back() + 1) +
                            " but the function has " + std::to_string(g.size()) + " groups");
  }
}

inline void check_groups(const FunctionSpec& phi, const Groups& g) {
  std::vector<int> seen(phi.arity(), 0);
  for (const auto& grp : g) {
    if (grp.empty()) throw PreconditionError("empty variable group");
    for (std::size_t i : grp) {
      if (i >= phi.arity()) throw PreconditionError("variable group index out of range");
      ++seen[i];
    }
  }
  for (int c : seen) {
    if (c != 1) throw PreconditionError("variable groups must partition the variables");
  }
}

inline std::vector<std::string> group_vars(const FunctionSpec& phi, const Groups& g, const std::vector<std::size_t>& s) {
  std::vector<std::size_t> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> out;
  for (std::size_t gi : sorted) {
    for (std::size_t v : g[gi]) out.push_back(phi.vars[v]);
  }
  return out;
}

inline std::vector<std::size_t> complement(std::size_t k, const std::vector<std::size_t>& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    if (std::find(s.begin(), s.end(), i) == s.end()) out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Mixed Hessian between the variables of groups E and groups F.
inline ExprMatrix mixed_hessian(const FunctionSpec& phi, const Groups& g, const std::vector<std::size_t>& e,
                                const std::vector<std::size_t>& f) {
  detail::check_groups(phi, g);
  detail::check_index_set(g, e, "E");
  detail::check_index_set(g, f, "F");
  return mixed_hessian(phi.expr, detail::group_vars(phi, g, e), detail::group_vars(phi, g, f));
}

/// Block matrix over two copies x (unprimed) and y (primed) of the domain:
///   [ 0            grad_{x_E'} Phi(x)     -grad_{y_F'} Phi(y)   ]
///   [ d_{x_E}Phi   H_{x_E, x_E'} Phi(x)   0                     ]
///   [ d_{y_F}Phi   0                      H_{y_F, y_F'} Phi(y)  ]
/// with E' and F' the complementary groups.
struct JMatrix {
  ExprMatrix matrix;
  std::vector<std::string> vars;  // x variables then primed y variables
  Box box;                        // the domain box, twice
  std::vector<std::string> x_e, x_e_prime, y_f, y_f_prime;
};

inline JMatrix assemble_J(const FunctionSpec& phi, const Groups& g, const std::vector<std::size_t>& e,
                          const std::vector<std::size_t>& f) {
  detail::check_groups(phi, g);
  detail::check_index_set(g, e, "E");
  detail::check_index_set(g, f, "F");
  auto ec = detail::complement(g.size(), e), fc = detail::complement(g.size(), f);
  if (ec.empty() || fc.empty()) throw PreconditionError("E and F must be proper subsets of the groups");

  JMatrix j;
  j.vars = phi.vars;
  for (const auto& v : phi.vars) j.vars.push_back(primed(v));
  j.box = phi.box;
  j.box.insert(j.box.end(), phi.box.begin(), phi.box.end());

  auto prime_all = [](std::vector<std::string> vs) {
    for (auto& v : vs) v = primed(v);
    return vs;
  };
  j.x_e = detail::group_vars(phi, g, e);
  j.x_e_prime = detail::group_vars(phi, g, ec);
  j.y_f = prime_all(detail::group_vars(phi, g, f));
  j.y_f_prime = prime_all(detail::group_vars(phi, g, fc));

  const Expr& px = phi.expr;
  Expr py = primed_copy(phi.expr, phi.vars);
  const std::size_t ne = j.x_e.size(), nf = j.y_f.size(), nec = j.x_e_prime.size(), nfc = j.y_f_prime.size();
  ExprMatrix m(1 + ne + nf, 1 + nec + nfc);
  for (std::size_t c = 0; c < nec; ++c) m(0, 1 + c) = differentiate(px, j.x_e_prime[c]);
  for (std::size_t c = 0; c < nfc; ++c) m(0, 1 + nec + c) = simplify(-differentiate(py, j.y_f_prime[c]));
  for (std::size_t r = 0; r < ne; ++r) {
    Expr d = differentiate(px, j.x_e[r]);
    m(1 + r, 0) = d;
    for (std::size_t c = 0; c < nec; ++c) m(1 + r, 1 + c) = differentiate(d, j.x_e_prime[c]);
  }
  for (std::size_t r = 0; r < nf; ++r) {
    Expr d = differentiate(py, j.y_f[r]);
    m(1 + ne + r, 0) = d;
    for (std::size_t c = 0; c < nfc; ++c) m(1 + ne + r, 1 + nec + c) = differentiate(d, j.y_f_prime[c]);
  }
  j.matrix = std::move(m);
  return j;
}

/// Two-point matrix for Phi(x, y) with x the first dx variables: E = {x}, F = {y}.
inline JMatrix assemble_two_point(const FunctionSpec& phi, std::size_t dx) {
  return assemble_J(phi, two_point_groups(dx, phi.arity()), {0}, {1});
}

/// Determinant of the bordered mixed Hessian [[0, grad_y Phi], [grad_x Phi^T, H_xy Phi]].
inline Expr monge_ampere(const FunctionSpec& phi, std::size_t dx) {
  if (2 * dx != phi.arity()) throw PreconditionError("Monge-Ampere determinant needs equal group dimensions");
  std::vector<std::string> xs(phi.vars.begin(), phi.vars.begin() + static_cast<std::ptrdiff_t>(dx));
  std::vector<std::string> ys(phi.vars.begin() + static_cast<std::ptrdiff_t>(dx), phi.vars.end());
  ExprMatrix m(dx + 1, dx + 1);
  for (std::size_t j = 0; j < dx; ++j) m(0, 1 + j) = differentiate(phi.expr, ys[j]);
  for (std::size_t i = 0; i < dx; ++i) {
    Expr d = differentiate(phi.expr, xs[i]);
    m(1 + i, 0) = d;
    for (std::size_t j = 0; j < dx; ++j) m(1 + i, 1 + j) = differentiate(d, ys[j]);
  }
  return symbolic_det(m);
}

// ---------------------------------------------------------------------------
// Classification

enum class Classification { SpecialForm, Expanding, Inconclusive };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::SpecialForm: return "SpecialForm";
    case Classification::Expanding: return "Expanding";
    default: return "Inconclusive";
  }
}

struct CertificateStatus {
  enum class Status { IdenticallyZero, NonvanishingOnBox, VanishesSomewhere, Undetermined };
  std::string name;
  Expr expr;
  Status status = Status::Undetermined;
  bool symbolic = false;           // zero decided by simplification
  std::vector<double> witness;     // a point where the certificate is nonzero
  double witness_value = 0;
  std::vector<double> zero_point;  // approximate zero, when it changes sign on the box
  double scale = 0;                // largest sampled magnitude
};

inline const char* to_string(CertificateStatus::Status s) {
  switch (s) {
    case CertificateStatus::Status::IdenticallyZero: return "IdenticallyZero";
    case CertificateStatus::Status::NonvanishingOnBox: return "NonvanishingOnBox";
    case CertificateStatus::Status::VanishesSomewhere: return "VanishesSomewhere";
    default: return "Undetermined";
  }
}

struct DegeneracyReport {
  int arity = 0;
  Classification classification = Classification::Inconclusive;
  std::vector<CertificateStatus> certificates;
  std::vector<double> witness_point;  // all decisive certificates nonzero here
  std::optional<Box> witness_box;     // sign-stable neighbourhood of witness_point
  int i0 = 0;                         // arity 3: index (1..3) of the nonvanishing G
  std::string reason;
  std::vector<std::string> notes;

  const CertificateStatus* find(const std::string& name) const {
    for (const auto& c : certificates) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct ClassifyOptions {
  ZeroPolicy zero;
  int sign_samples = 256;   // sampled sign scan per certificate
  double margin = 0.1;      // witness box keeps |c| >= margin * |c(witness)|
  bool flip_wedge = false;  // negate the orientation of kappa
};

namespace detail {

inline std::vector<std::vector<double>> scan_points(const Box& box, int random, std::uint64_t seed) {
  std::vector<std::vector<double>> pts;
  pts.push_back(box_center(box));
  // 3^d lattice including corners and face centres.
  std::size_t d = box.size(), total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= 3;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> p(d);
    std::size_t r = k;
    for (std::size_t i = 0; i < d; ++i) {
      p[i] = box[i].lo + 0.5 * static_cast<double>(r % 3) * box[i].width();
      r /= 3;
    }
    pts.push_back(std::move(p));
  }
  auto g = rng_stream(seed, 0x7363616eULL);
  for (int i = 0; i < random; ++i) pts.push_back(sample_box(box, g));
  return pts;
}

inline CertificateStatus assess(const std::string& name, const Expr& e, const std::vector<std::string>& vars,
                                const Box& box, const ClassifyOptions& opt) {
  CertificateStatus c;
  c.name = name;
  c.expr = e;
  ZeroResult z = is_identically_zero(e, vars, box, opt.zero);
  if (z.zero()) {
    c.status = CertificateStatus::Status::IdenticallyZero;
    c.symbolic = z.symbolic;
    return c;
  }
  if (z.verdict == ZeroResult::Verdict::Undeterminable || z.domain_failures * 2 > opt.zero.samples) {
    c.status = CertificateStatus::Status::Undetermined;
    return c;
  }
  CompiledExpr ce(e, vars);
  auto pts = scan_points(box, opt.sign_samples, opt.zero.seed);
  std::vector<double> pos, neg;
  double vpos = 0, vneg = 0;
  for (const auto& p : pts) {
    double v;
    if (ce.try_eval(p, v) >= 0) continue;
    c.scale = std::max(c.scale, std::fabs(v));
    if (v > 0 && pos.empty()) {
      pos = p;
      vpos = v;
    }
    if (v < 0 && neg.empty()) {
      neg = p;
      vneg = v;
    }
    if (v == 0 && c.zero_point.empty()) c.zero_point = p;
  }
  // Prefer the box centre as the reported witness when it is clearly nonzero.
  double vc;
  if (ce.try_eval(pts[0], vc) < 0 && std::fabs(vc) > 1e-6 * c.scale) {
    c.witness = pts[0];
    c.witness_value = vc;
  } else {
    c.witness = z.witness;
    c.witness_value = z.value;
  }
  if (!pos.empty() && !neg.empty()) {
    // Bisect along the segment for a sign change.
    std::vector<double> a = pos, b = neg, m(a.size());
    for (int it = 0; it < 60; ++it) {
      for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
      double v;
      if (ce.try_eval(m, v) >= 0) break;
      if (v == 0) break;
      (v > 0 ? a : b) = m;
    }
    c.zero_point = m;
    (void)vpos;
    (void)vneg;
  }
  c.status = c.zero_point.empty() ? CertificateStatus::Status::NonvanishingOnBox
                                  : CertificateStatus::Status::VanishesSomewhere;
  return c;
}

// Largest box around w (grown uniformly towards the domain box, then side by
// side) on which every certificate keeps the sign of its value at w with
// magnitude at least margin * |value at w|.
inline Box grow_witness_box(const std::vector<CompiledExpr>& certs, const std::vector<double>& w, const Box& box,
                            double margin, std::uint64_t seed) {
  std::vector<double> ref(certs.size());
  for (std::size_t i = 0; i < certs.size(); ++i) ref[i] = certs[i](w);
  std::size_t d = w.size();
  auto ok = [&](const Box& b) {
    auto pts = scan_points(b, 48, seed);
    for (const auto& p : pts) {
      for (std::size_t i = 0; i < certs.size(); ++i) {
        double v;
        if (certs[i].try_eval(p, v) >= 0) return false;
        if (v * ref[i] <= 0 || std::fabs(v) < margin * std::fabs(ref[i])) return false;
      }
    }
    return true;
  };
  auto scaled = [&](double s) {
    Box b(d);
    for (std::size_t j = 0; j < d; ++j) b[j] = {w[j] - s * (w[j] - box[j].lo), w[j] + s * (box[j].hi - w[j])};
    return b;
  };
  double lo = 0, hi = 1;
  if (ok(scaled(1))) return box;
  for (int it = 0; it < 30; ++it) {
    double mid = 0.5 * (lo + hi);
    (ok(scaled(mid)) ? lo : hi) = mid;
  }
  Box b = scaled(lo);
  for (std::size_t j = 0; j < d; ++j) {
    for (int side = 0; side < 2; ++side) {
      double from = side ? b[j].hi : b[j].lo, to = side ? box[j].hi : box[j].lo;
      double a = 0, c = 1;
      Box t = b;
      (side ? t[j].hi : t[j].lo) = to;
      if (ok(t)) {
        b = t;
        continue;
      }
      for (int it = 0; it < 20; ++it) {
        double mid = 0.5 * (a + c);
        t = b;
        (side ? t[j].hi : t[j].lo) = from + mid * (to - from);
        (ok(t) ? a : c) = mid;
      }
      (side ? b[j].hi : b[j].lo) = from + a * (to - from);
    }
  }
  return b;
}

// Sample point where all certificates are jointly largest relative to their scale.
inline std::vector<double> joint_witness(const std::vector<CompiledExpr>& certs, const std::vector<double>& scales,
                                         const Box& box, std::uint64_t seed) {
  auto pts = scan_points(box, 512, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> best;
  double best_score = -1;
  for (const auto& p : pts) {
    double score = 1e300;
    for (std::size_t i = 0; i < certs.size(); ++i) {
      double v;
      if (certs[i].try_eval(p, v) >= 0) {
        score = -1;
        break;
      }
      score = std::min(score, std::fabs(v) / (scales[i] > 0 ? scales[i] : 1.0));
    }
    if (score > best_score + 1e-12) {
      best_score = score;
      best = p;
    }
  }
  return best;
}

inline int domain_failures(const FunctionSpec& f, int samples, std::uint64_t seed) {
  CompiledExpr ce(f.expr, f.vars);
  auto g = rng_stream(seed, 0x70726f62ULL);
  int bad = 0;
  for (int i = 0; i < samples; ++i) {
    double v;
    if (ce.try_eval(sample_box(f.box, g), v) >= 0) ++bad;
  }
  return bad;
}

}  // namespace detail

/// Classifies f (two or three variables) as a special form or expanding on its box.
inline DegeneracyReport classify(const FunctionSpec& f, const ClassifyOptions& opt = {}) {
  f.validate();
  DegeneracyReport rep;
  rep.arity = static_cast<int>(f.arity());
  if (f.arity() != 2 && f.arity() != 3) throw PreconditionError("classify expects two or three variables");
  using S = CertificateStatus::Status;

  int bad = detail::domain_failures(f, opt.zero.samples, opt.zero.seed);
  if (bad * 2 > opt.zero.samples) {
    rep.classification = Classification::Inconclusive;
    rep.reason = "f is undefined on " + std::to_string(bad) + " of " + std::to_string(opt.zero.samples) + " samples";
    return rep;
  }
  auto inconclusive = [&](const CertificateStatus& c) {
    rep.classification = Classification::Inconclusive;
    rep.reason = "could not evaluate " + c.name + " on enough of the box";
  };

  if (f.arity() == 2) {
    Partials2 p = partials2(f);
    const std::string& x = f.vars[0];
    const std::string& y = f.vars[1];
    for (auto [name, e] : {std::pair{"f_" + x, p.fx}, {"f_" + y, p.fy}, {"f_" + x + y, p.fxy}}) {
      rep.certificates.push_back(detail::assess(name, e, f.vars, f.box, opt));
    }
    for (const auto& c : rep.certificates) {
      if (c.status == S::IdenticallyZero) {
        rep.classification = Classification::SpecialForm;
        rep.reason = c.name + " vanishes identically";
        return rep;
      }
    }
    for (const auto& c : rep.certificates) {
      if (c.status == S::Undetermined) {
        inconclusive(c);
        return rep;
      }
    }
    rep.certificates.push_back(detail::assess("kappa", kappa(f, opt.flip_wedge, opt.zero), f.vars, f.box, opt));
    const CertificateStatus& k = rep.certificates.back();
    if (k.status == S::IdenticallyZero) {
      rep.classification = Classification::SpecialForm;
      rep.reason = "kappa vanishes identically";
      return rep;
    }
    if (k.status == S::Undetermined) {
      inconclusive(k);
      return rep;
    }
    rep.classification = Classification::Expanding;
    rep.reason = "kappa is not identically zero";
    for (const auto& c : rep.certificates) {
      if (c.status == S::VanishesSomewhere) {
        rep.notes.push_back("bad set: " + c.name + " = 0 meets the box");
      }
    }
  } else {
    const auto& v = f.vars;
    Expr f1 = differentiate(f.expr, v[0]), f2 = differentiate(f.expr, v[1]), f3 = differentiate(f.expr, v[2]);
    Expr f12 = differentiate(f1, v[1]), f13 = differentiate(f1, v[2]), f23 = differentiate(f2, v[2]);
    Auxiliary3 g = aux_trivariate(f);
    std::vector<std::pair<std::string, Expr>> list = {
        {"f_" + v[0], f1},         {"f_" + v[1], f2},         {"f_" + v[2], f3},
        {"f_" + v[0] + v[1], f12}, {"f_" + v[0] + v[2], f13}, {"f_" + v[1] + v[2], f23},
        {"G1", g.g1},              {"G2", g.g2},              {"G3", g.g3}};
    for (const auto& [name, e] : list) rep.certificates.push_back(detail::assess(name, e, f.vars, f.box, opt));
    for (std::size_t i = 0; i < 3; ++i) {
      if (rep.certificates[i].status == S::IdenticallyZero) {
        rep.notes.push_back(rep.certificates[i].name + " vanishes identically: f does not depend on " + v[i]);
      }
    }
    bool all_zero = true;
    double best = -1;
    for (int i = 0; i < 3; ++i) {
      const auto& c = rep.certificates[static_cast<std::size_t>(6 + i)];
      if (c.status == S::Undetermined) {
        inconclusive(c);
        return rep;
      }
      if (c.status != S::IdenticallyZero) {
        all_zero = false;
        double rel = std::fabs(c.witness_value) / (c.scale > 0 ? c.scale : 1.0);
        if (rel > best + 1e-12) {
          best = rel;
          rep.i0 = i + 1;
        }
      }
    }
    if (all_zero) {
      rep.classification = Classification::SpecialForm;
      rep.reason = "G1, G2, G3 vanish identically";
      return rep;
    }
    rep.classification = Classification::Expanding;
    rep.reason = "G" + std::to_string(rep.i0) + " is not identically zero";
    for (std::size_t i = 6; i < 9; ++i) {
      if (rep.certificates[i].status == S::VanishesSomewhere) {
        rep.notes.push_back("bad set: " + rep.certificates[i].name + " = 0 meets the box");
      }
    }
  }

  // Localize: a point and a sub-box where the decisive certificates keep their sign.
  std::vector<CompiledExpr> certs;
  std::vector<double> scales;
  auto use = [&](const CertificateStatus& c) {
    if (c.status == S::IdenticallyZero) return;
    certs.emplace_back(c.expr, f.vars);
    scales.push_back(c.scale);
  };
  if (f.arity() == 2) {
    for (const auto& c : rep.certificates) use(c);
  } else {
    for (std::size_t i = 0; i < 3; ++i) use(rep.certificates[i]);
    use(rep.certificates[static_cast<std::size_t>(5 + rep.i0)]);
  }
  rep.witness_point = detail::joint_witness(certs, scales, f.box, opt.zero.seed);
  if (!rep.witness_point.empty()) {
    rep.witness_box = detail::grow_witness_box(certs, rep.witness_point, f.box, opt.margin, opt.zero.seed);
  }
  rep.notes.push_back("conclusions are local to the box");
  return rep;
}

// ---------------------------------------------------------------------------
// Gamma_m(E,F) nondegeneracy along Z = {Phi(x) = Phi(y)}

struct GammaOptions {
  int samples = 200;
  double tol = 1e-9;              // corank tolerance
  double gradient_floor = 1e-8;   // Newton pivot / gradient condition threshold
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct GammaResult {
  enum class Verdict { Holds, Violated };
  Verdict verdict = Verdict::Holds;
  int max_corank = 0;
  std::vector<double> witness;  // x then y, where the condition fails
  int witness_corank = 0;
  std::string reason;
  int samples = 0;
  int off_diagonal = 0;
  int attempts = 0;
  int newton_failures = 0;

  bool holds() const { return verdict == Verdict::Holds; }
};

/// Samples Z, then checks the gradient condition and corank(J_{E,F}) <= m at
/// each sample. Every fourth sample is diagonal (y = x); the rest come from
/// Newton on one coordinate of y.
inline GammaResult gamma_nondegenerate(const FunctionSpec& phi, const Groups& groups, const std::vector<std::size_t>& e,
                                       const std::vector<std::size_t>& f, int m, const GammaOptions& opt = {}) {
  if (m < 0) throw PreconditionError("m must be non-negative");
  phi.validate();
  JMatrix j = assemble_J(phi, groups, e, f);
  const std::size_t n = phi.arity();
  CompiledMatrix cm(j.matrix, j.vars);
  CompiledExpr value(phi.expr, phi.vars);
  std::vector<CompiledExpr> grad;
  for (const auto& v : phi.vars) grad.emplace_back(differentiate(phi.expr, v), phi.vars);
  // Gradient-condition blocks: grad_{x_E} Phi(x) and grad_{y_F} Phi(y).
  std::vector<std::size_t> e_idx, f_idx;
  for (const auto& v : j.x_e) e_idx.push_back(static_cast<std::size_t>(std::find(phi.vars.begin(), phi.vars.end(), v) - phi.vars.begin()));
  for (const auto& v : j.y_f) {
    std::string base = v.substr(0, v.size() - 1);
    f_idx.push_back(static_cast<std::size_t>(std::find(phi.vars.begin(), phi.vars.end(), base) - phi.vars.begin()));
  }

  struct Sample {
    bool ok = false;
    bool diagonal = false;
    int attempts = 0;
    int failures = 0;
    std::vector<double> xy;
    int corank = 0;
    bool gradient_ok = true;
  };
  std::vector<Sample> out(static_cast<std::size_t>(opt.samples));

  auto newton_on = [&](std::vector<double>& y, std::size_t c, double target) {
    for (int it = 0; it < 50; ++it) {
      double v, d;
      if (value.try_eval(y, v) >= 0 || grad[c].try_eval(y, d) >= 0) return false;
      double r = v - target;
      if (std::fabs(r) <= 1e-12 * std::max(1.0, std::fabs(target))) return true;
      if (std::fabs(d) < opt.gradient_floor) return false;
      y[c] -= r / d;
      if (!phi.box[c].contains(y[c])) return false;
    }
    return false;
  };

  parallel_for(out.size(), opt.threads, [&](std::size_t s) {
    Sample& smp = out[s];
    auto g = rng_stream(opt.seed, s);
    smp.diagonal = s % 4 == 0;
    for (int attempt = 0; attempt < 20 && !smp.ok; ++attempt) {
      ++smp.attempts;
      std::vector<double> x = sample_box(phi.box, g);
      double target;
      if (value.try_eval(x, target) >= 0) {
        ++smp.failures;
        continue;
      }
      std::vector<double> y = smp.diagonal ? x : sample_box(phi.box, g);
      if (!smp.diagonal) {
        bool landed = false;
        for (std::size_t k = 0; k < n && !landed; ++k) {
          std::size_t c = n - 1 - k;  // last coordinate first
          double d;
          if (grad[c].try_eval(y, d) >= 0 || std::fabs(d) < opt.gradient_floor) continue;
          std::vector<double> trial = y;
          if (newton_on(trial, c, target)) {
            y = trial;
            landed = true;
          }
        }
        if (!landed) {
          ++smp.failures;
          continue;
        }
      }
      smp.xy = x;
      smp.xy.insert(smp.xy.end(), y.begin(), y.end());
      double ge = 0, gf = 0;
      for (std::size_t i : e_idx) ge = std::max(ge, std::fabs(grad[i](x)));
      for (std::size_t i : f_idx) gf = std::max(gf, std::fabs(grad[i](y)));
      smp.gradient_ok = ge > opt.gradient_floor && gf > opt.gradient_floor;
      smp.corank = numeric_corank(cm(smp.xy), opt.tol).corank;
      smp.ok = true;
    }
  });

  GammaResult r;
  int landed_off = 0, tried_off = 0;
  for (const auto& smp : out) {
    r.attempts += smp.attempts;
    r.newton_failures += smp.failures;
    if (!smp.diagonal) {
      tried_off += smp.attempts;
      landed_off += smp.ok ? 1 : 0;
    }
  }
  if (tried_off > 0 && landed_off * 10 < tried_off) throw NumericalError("Z-sampling failed: Newton rarely landed on Z");
  for (const auto& smp : out) {
    if (!smp.ok) continue;
    ++r.samples;
    if (!smp.diagonal) ++r.off_diagonal;
    r.max_corank = std::max(r.max_corank, smp.corank);
    if (r.verdict == GammaResult::Verdict::Holds && (!smp.gradient_ok || smp.corank > m)) {
      r.verdict = GammaResult::Verdict::Violated;
      r.witness = smp.xy;
      r.witness_corank = smp.corank;
      r.reason = smp.gradient_ok ? "corank " + std::to_string(smp.corank) + " exceeds m = " + std::to_string(m)
                                 : "gradient condition fails";
    }
  }
  if (r.samples == 0) throw NumericalError("Z-sampling failed: no point of Z found");
  return r;
}

// ---------------------------------------------------------------------------
// Distance to a parametrized hypersurface

struct SurfaceCheck {
  bool tangent = false;
  double det = 0;  // det [ x - psi(u) | -D_u psi ]
};

/// psi: d component expressions in d-1 parameters u. Tangent iff x - psi(u)
/// lies in the tangent space at psi(u).
inline SurfaceCheck surface_distance_check(const std::vector<Expr>& psi, const std::vector<std::string>& u_vars,
                                           const std::vector<double>& x, const std::vector<double>& u,
                                           double tol = 1e-9) {
  const std::size_t d = psi.size();
  if (d < 2 || u_vars.size() + 1 != d || x.size() != d || u.size() + 1 != d) {
    throw PreconditionError("surface check needs d components, d-1 parameters and a point in R^d");
  }
  Eigen::MatrixXd dpsi(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d - 1));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    m(static_cast<Eigen::Index>(i), 0) = x[i] - evaluate(psi[i], u_vars, u);
    for (std::size_t k = 0; k + 1 < d; ++k) {
      double v = evaluate(differentiate(psi[i], u_vars[k]), u_vars, u);
      dpsi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + 1)) = -v;
    }
  }
  if (numeric_corank(dpsi, 1e-9).corank != 0) throw PreconditionError("rank-deficient parametrization at u");
  SurfaceCheck r;
  r.det = m.determinant();
  r.tangent = std::fabs(r.det) < tol;
  return r;
}

}  // namespace erlab
