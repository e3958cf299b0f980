#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "erlab/errors.hpp"
#include "erlab/parallel.hpp"

namespace erlab {

enum class Representative { Left, Midpoint };

inline const char* representative_name(Representative r) { return r == Representative::Left ? "left" : "midpoint"; }

/// Self-similar set with m equally spaced pieces of ratio r, truncated at
/// level n and mapped onto [lo, hi].
struct CantorSpec {
  int m = 2;
  double r = 1.0 / 3;
  int n = 1;
  double lo = 0;
  double hi = 1;
  Representative rule = Representative::Left;

  void validate() const {
    if (m < 2) throw PreconditionError("cantor: need at least 2 branches");
    if (!(r > 0) || r * m > 1 + 1e-15) throw PreconditionError("cantor: ratio must lie in (0, 1/m]");
    if (n < 1) throw PreconditionError("cantor: level must be >= 1");
    if (!(lo < hi)) throw PreconditionError("cantor: empty interval");
  }
};

/// Digit set construction: all sums d_1/b + ... + d_n/b^n with d_i in D.
struct DigitSpec {
  int base = 4;
  std::vector<int> digits{0, 1};
  int n = 1;
  double lo = 0;
  double hi = 1;

  void validate() const {
    if (base < 2) throw PreconditionError("digits: base must be >= 2");
    if (digits.empty()) throw PreconditionError("digits: empty digit set");
    std::vector<int> d = digits;
    std::sort(d.begin(), d.end());
    if (std::adjacent_find(d.begin(), d.end()) != d.end()) throw PreconditionError("digits: repeated digit");
    if (d.front() < 0 || d.back() >= base) throw PreconditionError("digits: digit outside 0..base-1");
    if (n < 1) throw PreconditionError("digits: level must be >= 1");
    if (!(lo < hi)) throw PreconditionError("digits: empty interval");
  }
};

/// Sorted points approximating a fractal, with its declared dimension.
struct PointSet1D {
  std::vector<double> points;
  std::string provenance;  // canonical description of the generating spec
  std::uint64_t hash = 0;  // FNV-1a of provenance
  double dimension = 0;
  double lo = 0, hi = 1;   // interval the points live in

  std::size_t size() const { return points.size(); }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i]) || points[i] < lo || points[i] > hi) {
        throw PreconditionError("point set: point outside [lo, hi]");
      }
      if (i > 0 && !(points[i - 1] < points[i])) throw PreconditionError("point set: points not strictly increasing");
    }
  }
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Points allowed in one generated set; 2^26 doubles is 512 MiB.
inline constexpr std::size_t kPointBudget = std::size_t{1} << 26;

inline double similarity_dimension(double m, double r) {
  if (!(m >= 1)) throw PreconditionError("similarity dimension: need m >= 1");
  if (!(r > 0 && r < 1)) throw PreconditionError("similarity dimension: need 0 < r < 1");
  return std::log(m) / std::log(1 / r);
}

/// Ratio r = m^(-1/alpha) giving similarity dimension alpha with m branches.
/// Rounded to double, so similarity_dimension(m, r) matches alpha to ~1e-16.
inline double ratio_for_dimension(double alpha, int m = 2) {
  if (!(alpha > 0 && alpha <= 1)) throw PreconditionError("dimension target must lie in (0, 1]");
  if (m < 2) throw PreconditionError("need at least 2 branches");
  return std::pow(static_cast<double>(m), -1 / alpha);
}

namespace detail {

inline std::size_t checked_count(int m, int n, std::size_t budget) {
  std::size_t c = 1;
  for (int i = 0; i < n; ++i) {
    if (c > budget / static_cast<std::size_t>(m)) {
      throw PreconditionError(std::to_string(m) + "^" + std::to_string(n) + " points exceed the budget of " +
                              std::to_string(budget));
    }
    c *= static_cast<std::size_t>(m);
  }
  return c;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Points of the level-n orbit on [0, 1] with translations c (increasing),
// enumerated in lexicographic digit order, which is increasing order. The
// leading digit is split across workers.
inline std::vector<double> orbit(const std::vector<double>& c, double r, int n, double shift, unsigned threads) {
  const std::size_t m = c.size();
  std::vector<double> scale(static_cast<std::size_t>(n));
  scale[0] = 1;
  for (int i = 1; i < n; ++i) scale[static_cast<std::size_t>(i)] = scale[static_cast<std::size_t>(i) - 1] * r;
  std::size_t block = 1;
  for (int i = 1; i < n; ++i) block *= m;
  std::vector<double> out(block * m);
  parallel_for(m, threads, [&](std::size_t j) {
    std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
    digit[0] = j;
    for (std::size_t k = 0; k < block; ++k) {
      // Summing from the finest digit keeps the rounding independent of the prefix.
      double v = shift;
      for (int i = n - 1; i >= 0; --i) v += c[digit[static_cast<std::size_t>(i)]] * scale[static_cast<std::size_t>(i)];
      out[j * block + k] = v;
      for (int i = n - 1; i >= 1; --i) {
        if (++digit[static_cast<std::size_t>(i)] < m) break;
        digit[static_cast<std::size_t>(i)] = 0;
      }
    }
  });
  return out;
}

inline void map_to(std::vector<double>& pts, double lo, double hi) {
  const double w = hi - lo;
  for (double& p : pts) p = std::clamp(lo + w * p, lo, hi);
}

}  // namespace detail

/// Level-n orbit of the maps t -> r t + c_j, c_j = j (1 - r) / (m - 1), so
/// all gaps at a level are equal.
inline PointSet1D cantor_points(const CantorSpec& s, unsigned threads = 1, std::size_t budget = kPointBudget) {
  s.validate();
  detail::checked_count(s.m, s.n, budget);
  std::vector<double> c(static_cast<std::size_t>(s.m));
  for (int j = 0; j < s.m; ++j) c[static_cast<std::size_t>(j)] = j * (1 - s.r) / (s.m - 1);
  double shift = s.rule == Representative::Midpoint ? 0.5 * std::pow(s.r, s.n) : 0.0;
  PointSet1D out;
  out.points = detail::orbit(c, s.r, s.n, shift, threads);
  detail::map_to(out.points, s.lo, s.hi);
  out.lo = s.lo;
  out.hi = s.hi;
  out.dimension = similarity_dimension(s.m, s.r);
  out.provenance = "cantor m=" + std::to_string(s.m) + " r=" + detail::fmt(s.r) + " n=" + std::to_string(s.n) +
                   " interval=[" + detail::fmt(s.lo) + "," + detail::fmt(s.hi) + "] rule=" +
                   representative_name(s.rule);
  out.hash = fnv1a(out.provenance);
  return out;
}

inline PointSet1D digit_points(const DigitSpec& s, unsigned threads = 1, std::size_t budget = kPointBudget) {
  s.validate();
  detail::checked_count(static_cast<int>(s.digits.size()), s.n, budget);
  std::vector<int> d = s.digits;
  std::sort(d.begin(), d.end());
  std::vector<double> c;
  for (int v : d) c.push_back(static_cast<double>(v) / s.base);
  PointSet1D out;
  out.points = detail::orbit(c, 1.0 / s.base, s.n, 0.0, threads);
  detail::map_to(out.points, s.lo, s.hi);
  out.lo = s.lo;
  out.hi = s.hi;
  out.dimension = d.size() == 1 ? 0.0 : similarity_dimension(static_cast<double>(d.size()), 1.0 / s.base);
  std::string ds;
  for (int v : d) ds += (ds.empty() ? "" : ",") + std::to_string(v);
  out.provenance = "digits b=" + std::to_string(s.base) + " D={" + ds + "} n=" + std::to_string(s.n) + " interval=[" +
                   detail::fmt(s.lo) + "," + detail::fmt(s.hi) + "]";
  out.hash = fnv1a(out.provenance);
  return out;
}

/// Explicit finite set, sorted and deduplicated; dimension 0.
inline PointSet1D explicit_points(std::vector<double> pts, double lo, double hi) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  PointSet1D out;
  out.points = std::move(pts);
  out.lo = lo;
  out.hi = hi;
  out.validate();
  std::string desc = "explicit";
  for (double p : out.points) desc += " " + detail::fmt(p);
  out.provenance = desc;
  out.hash = fnv1a(desc);
  return out;
}

}  // namespace erlab
