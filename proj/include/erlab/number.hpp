#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace erlab {

/// Exact rational, always normalized: gcd(num, den) == 1 and den > 0.
/// Values that fit in 64 bits use machine integers; wider ones move to
/// arbitrary precision. Results wider than kMaxBits throw std::overflow_error
/// so callers can fall back to floating point instead of carrying unbounded
/// coefficients.
class Rational {
 public:
  using Int = boost::multiprecision::cpp_int;
  static constexpr unsigned kMaxBits = 4096;

  Rational() = default;
  Rational(std::int64_t n) : n_(n), d_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(int n) : n_(n), d_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) { *this = from_wide(n, d); }
  Rational(Int n, Int d) { *this = from_big(std::move(n), std::move(d)); }

  Int num() const { return big_ ? big_->num : Int(n_); }
  Int den() const { return big_ ? big_->den : Int(d_); }
  /// Numerator and denominator when both fit in 64 bits.
  std::optional<std::pair<std::int64_t, std::int64_t>> small() const {
    if (big_) return std::nullopt;
    return std::make_pair(n_, d_);
  }

  bool is_integer() const { return big_ ? big_->den == 1 : d_ == 1; }
  bool is_zero() const { return !big_ && n_ == 0; }
  int sign() const { return big_ ? big_->num.sign() : (n_ > 0) - (n_ < 0); }
  double to_double() const {
    if (!big_ && std::abs(n_) < (std::int64_t{1} << 53) && d_ < (std::int64_t{1} << 53)) {
      return static_cast<double>(n_) / static_cast<double>(d_);
    }
    return boost::multiprecision::cpp_rational(num(), den()).convert_to<double>();
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      if (a.d_ == b.d_) return from_wide(static_cast<__int128>(a.n_) + b.n_, a.d_);
      return from_wide(static_cast<__int128>(a.n_) * b.d_ + static_cast<__int128>(b.n_) * a.d_,
                       static_cast<__int128>(a.d_) * b.d_);
    }
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    // Knuth's reduction: only gcd(t, g) is needed after the first gcd.
    Int an = a.num(), ad = a.den(), bn = b.num(), bd = b.den();
    Int g = gcd(ad, bd);
    if (g == 1) return from_reduced(an * bd + bn * ad, ad * bd);
    Int t = an * (bd / g) + bn * (ad / g);
    if (t.is_zero()) return Rational();
    Int g2 = gcd(t, g);
    return from_reduced(t / g2, (ad / g) * (bd / g2));
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) {
      return from_wide(static_cast<__int128>(a.n_) * b.n_, static_cast<__int128>(a.d_) * b.d_);
    }
    // Cancel across before multiplying so the gcds run on the smaller factors.
    Int an = a.num(), ad = a.den(), bn = b.num(), bd = b.den();
    if (an.is_zero() || bn.is_zero()) return Rational();
    Int g1 = gcd(an, bd), g2 = gcd(bn, ad);
    if (g1 != 1) {
      an /= g1;
      bd /= g1;
    }
    if (g2 != 1) {
      bn /= g2;
      ad /= g2;
    }
    return from_reduced(an * bn, ad * bd);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw std::domain_error("rational division by zero");
    if (!a.big_ && !b.big_) {
      return from_wide(static_cast<__int128>(a.n_) * b.d_, static_cast<__int128>(a.d_) * b.n_);
    }
    return from_big(a.num() * b.den(), a.den() * b.num());
  }
  Rational operator-() const {
    if (!big_ && n_ != INT64_MIN) {
      Rational r = *this;
      r.n_ = -n_;
      return r;
    }
    return from_big(-num(), den());
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return a.n_ == b.n_ && a.d_ == b.d_;
    if (!a.big_ || !b.big_) return false;  // normalized forms never straddle
    return a.big_->num == b.big_->num && a.big_->den == b.big_->den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    if (!a.big_ && !b.big_) return static_cast<__int128>(a.n_) * b.d_ < static_cast<__int128>(b.n_) * a.d_;
    return a.num() * b.den() < b.num() * a.den();
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  /// Integer power; negative exponents invert.
  Rational pow(int e) const {
    Rational base = e < 0 ? Rational(1) / *this : *this;
    unsigned k = static_cast<unsigned>(e < 0 ? -e : e);
    std::size_t bits = std::max(msb(base.num()), msb(base.den()));
    if (bits > 0 && bits * k > kMaxBits) throw std::overflow_error("rational overflow");
    Rational r(1);
    while (k) {
      if (k & 1u) r *= base;
      k >>= 1u;
      if (k) base *= base;
    }
    return r;
  }

  std::string str() const {
    if (!big_) return d_ == 1 ? std::to_string(n_) : std::to_string(n_) + "/" + std::to_string(d_);
    return big_->den == 1 ? big_->num.str() : big_->num.str() + "/" + big_->den.str();
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  struct Big {
    Int num, den;
  };

  static std::size_t msb(const Int& v) { return v.is_zero() ? 0 : boost::multiprecision::msb(abs(v)); }

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational from_wide(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational division by zero");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    Rational r;
    if (n > INT64_MAX || n < -INT64_MAX || d > INT64_MAX) {
      auto to_int = [](__int128 v) {
        bool neg = v < 0;
        unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
        Int out = static_cast<std::uint64_t>(u >> 64);
        out <<= 64;
        out += static_cast<std::uint64_t>(u);
        return neg ? Int(-out) : out;
      };
      r.big_ = std::make_shared<const Big>(Big{to_int(n), to_int(d)});
      return r;
    }
    r.n_ = static_cast<std::int64_t>(n);
    r.d_ = n == 0 ? 1 : static_cast<std::int64_t>(d);
    return r;
  }

  // n/d already in lowest terms with d > 0.
  static Rational from_reduced(Int n, Int d) {
    Rational r;
    static const Int hi = Int(INT64_MAX);
    if (abs(n) <= hi && d <= hi) {
      r.n_ = n.convert_to<std::int64_t>();
      r.d_ = d.convert_to<std::int64_t>();
      return r;
    }
    if (msb(n) >= kMaxBits || msb(d) >= kMaxBits) throw std::overflow_error("rational overflow");
    r.big_ = std::make_shared<const Big>(Big{std::move(n), std::move(d)});
    return r;
  }

  static Rational from_big(Int n, Int d) {
    if (d.is_zero()) throw std::domain_error("rational division by zero");
    if (d.sign() < 0) {
      n = -n;
      d = -d;
    }
    Rational r;
    if (n.is_zero()) return r;
    Int g = gcd(n, d);
    if (g != 1) {
      n /= g;
      d /= g;
    }
    static const Int lo = -Int(INT64_MAX), hi = Int(INT64_MAX);
    if (n >= lo && n <= hi && d <= hi) {
      r.n_ = n.convert_to<std::int64_t>();
      r.d_ = d.convert_to<std::int64_t>();
      return r;
    }
    if (msb(n) >= kMaxBits || msb(d) >= kMaxBits) throw std::overflow_error("rational overflow");
    r.big_ = std::make_shared<const Big>(Big{std::move(n), std::move(d)});
    return r;
  }

  std::int64_t n_ = 0;
  std::int64_t d_ = 1;
  std::shared_ptr<const Big> big_;
};

/// A scalar that stays exact while it can. Operations on two exact values
/// produce an exact value unless the rational overflows, in which case the
/// result silently degrades to a double.
class Number {
 public:
  Number() = default;
  Number(Rational q) : exact_(true), q_(q) {}  // NOLINT(google-explicit-constructor)
  Number(std::int64_t n) : exact_(true), q_(n) {}  // NOLINT(google-explicit-constructor)
  Number(int n) : exact_(true), q_(n) {}  // NOLINT(google-explicit-constructor)
  static Number inexact(double d) {
    Number r;
    r.exact_ = false;
    r.d_ = d;
    return r;
  }

  bool exact() const { return exact_; }
  const Rational& rational() const { return q_; }
  double value() const { return exact_ ? q_.to_double() : d_; }
  bool is_zero() const { return exact_ ? q_.is_zero() : d_ == 0.0; }
  bool is_one() const { return exact_ ? q_ == Rational(1) : d_ == 1.0; }
  bool is_integer() const { return exact_ && q_.is_integer(); }
  bool is_negative() const { return value() < 0; }

  friend Number operator+(const Number& a, const Number& b) {
    return combine(a, b, [](const Rational& x, const Rational& y) { return x + y; },
                   [](double x, double y) { return x + y; });
  }
  friend Number operator-(const Number& a, const Number& b) {
    return combine(a, b, [](const Rational& x, const Rational& y) { return x - y; },
                   [](double x, double y) { return x - y; });
  }
  friend Number operator*(const Number& a, const Number& b) {
    return combine(a, b, [](const Rational& x, const Rational& y) { return x * y; },
                   [](double x, double y) { return x * y; });
  }
  friend Number operator/(const Number& a, const Number& b) {
    return combine(a, b, [](const Rational& x, const Rational& y) { return x / y; },
                   [](double x, double y) { return x / y; });
  }
  Number operator-() const { return exact_ ? Number(-q_) : inexact(-d_); }

  Number pow(int e) const {
    if (exact_) {
      try {
        return Number(q_.pow(e));
      } catch (const std::overflow_error&) {
      }
    }
    return inexact(std::pow(value(), e));
  }

  friend bool operator==(const Number& a, const Number& b) {
    if (a.exact_ && b.exact_) return a.q_ == b.q_;
    if (a.exact_ != b.exact_) return false;
    return a.d_ == b.d_;
  }
  friend bool operator!=(const Number& a, const Number& b) { return !(a == b); }

  /// Printed form that parses back to the same value.
  std::string str() const {
    if (exact_) return q_.str();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d_);
    std::string s(buf);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }

 private:
  template <class RatOp, class DblOp>
  static Number combine(const Number& a, const Number& b, RatOp rop, DblOp dop) {
    if (a.exact_ && b.exact_) {
      try {
        return Number(rop(a.q_, b.q_));
      } catch (const std::overflow_error&) {
      }
    }
    return inexact(dop(a.value(), b.value()));
  }

  bool exact_ = true;
  Rational q_{};
  double d_ = 0.0;
};

}  // namespace erlab
