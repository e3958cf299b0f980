#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "erlab/degeneracy.hpp"
#include "erlab/errors.hpp"
#include "erlab/expr.hpp"
#include "erlab/fractal.hpp"
#include "erlab/function_spec.hpp"
#include "erlab/parallel.hpp"
#include "erlab/thresholds.hpp"

namespace erlab {

/// Occupancy of the cells [lo + i delta_min, lo + (i+1) delta_min) hit by an
/// image set. lo is a multiple of delta_min.
struct QuantizedSet {
  double lo = 0, hi = 0;          // effective range after widening
  double declared_lo = 0, declared_hi = 0;
  bool declared = false;
  double delta_min = 0;
  std::int64_t base = 0;          // lo / delta_min
  std::uint64_t cells = 0;
  std::vector<std::uint64_t> bits;
  std::uint64_t population = 0;
  std::uint64_t tuples = 0;
  std::uint64_t out_of_range = 0;  // values outside the declared range
  double min_value = 0, max_value = 0;

  bool test(std::uint64_t i) const { return (bits[i >> 6] >> (i & 63)) & 1u; }
  double range() const { return hi - lo; }

  bool operator==(const QuantizedSet& o) const {
    return lo == o.lo && hi == o.hi && delta_min == o.delta_min && base == o.base && cells == o.cells &&
           population == o.population && tuples == o.tuples && out_of_range == o.out_of_range && bits == o.bits;
  }
};

struct ImageOptions {
  std::optional<double> lo, hi;     // declared range; widened if values fall outside
  std::optional<double> delta_min;  // default: a power of two near range * 2^-26
  unsigned threads = default_threads();
  std::uint64_t max_cells = std::uint64_t{1} << 30;
};

/// Tuples the naive oracle path accepts.
inline constexpr std::uint64_t kNaiveLimit = std::uint64_t{1} << 16;

struct Rung {
  double delta = 0;
  std::uint64_t count = 0;
};

using Ladder = std::vector<Rung>;

namespace detail {

// floor(u), except that u within a few ulps below an integer counts as that
// integer: values on a cell boundary belong to the upper cell even after
// rounding. Any grid-aligned input would otherwise be split by noise.
// `scale` bounds the magnitudes u was computed from, in units of u.
inline std::int64_t snapped_floor(double u, double scale = 0) {
  double k = std::floor(u);
  double up = k + 1;
  double mag = std::max({1.0, std::fabs(u), scale});
  if (up - u <= 64 * std::numeric_limits<double>::epsilon() * mag) k = up;
  if (!(std::fabs(k) < 9.0e18)) throw NumericalError("quantization: value out of integer range");
  return static_cast<std::int64_t>(k);
}

inline std::uint64_t tuple_count(const std::vector<const PointSet1D*>& sets) {
  std::uint64_t n = 1;
  for (const auto* s : sets) {
    if (s->size() == 0) return 0;
    if (n > std::numeric_limits<std::uint64_t>::max() / s->size()) throw PreconditionError("image: product too large");
    n *= s->size();
  }
  return n;
}

// Calls visit(value) for every tuple whose first coordinate has index
// in [b, e); the remaining coordinates run in lexicographic order.
template <class Visit>
void stream_tuples(const CompiledExpr& f, const std::vector<const PointSet1D*>& sets, std::size_t b, std::size_t e,
                   Visit&& visit) {
  const std::size_t k = sets.size();
  std::array<double, 3> x{};
  std::array<std::size_t, 3> idx{};
  auto fail = [&] {
    std::string at;
    for (std::size_t i = 0; i < k; ++i) at += (i ? ", " : "") + std::to_string(x[i]);
    throw NumericalError("image: f undefined or not finite at (" + at + ")");
  };
  for (std::size_t i = b; i < e; ++i) {
    x[0] = sets[0]->points[i];
    idx[1] = idx[2] = 0;
    while (true) {
      for (std::size_t j = 1; j < k; ++j) x[j] = sets[j]->points[idx[j]];
      double v;
      if (f.try_eval(std::span<const double>(x.data(), k), v) >= 0 || !std::isfinite(v)) fail();
      visit(v);
      std::size_t j = k - 1;
      while (j >= 1) {
        if (++idx[j] < sets[j]->size()) break;
        idx[j] = 0;
        --j;
      }
      if (j == 0) break;
    }
  }
}

inline std::vector<const PointSet1D*> check_sets(const FunctionSpec& f, const std::vector<PointSet1D>& sets) {
  f.validate();
  if (sets.size() < 2 || sets.size() > 3) throw PreconditionError("image: need 2 or 3 input sets");
  if (sets.size() != f.arity()) {
    throw PreconditionError("image: f has " + std::to_string(f.arity()) + " variables but " +
                            std::to_string(sets.size()) + " sets were given");
  }
  std::vector<const PointSet1D*> ptrs;
  for (const auto& s : sets) ptrs.push_back(&s);
  return ptrs;
}

// Fixes the range, resolution and cell count from the observed extremes.
inline QuantizedSet layout(double vmin, double vmax, std::uint64_t outside, std::uint64_t tuples,
                           const ImageOptions& opt) {
  QuantizedSet q;
  q.tuples = tuples;
  q.min_value = vmin;
  q.max_value = vmax;
  q.out_of_range = outside;
  double lo = vmin, hi = vmax;
  if (opt.lo || opt.hi) {
    if (!opt.lo || !opt.hi) throw PreconditionError("image: declared range needs both ends");
    if (!(*opt.lo < *opt.hi)) throw PreconditionError("image: declared range is empty");
    q.declared = true;
    q.declared_lo = *opt.lo;
    q.declared_hi = *opt.hi;
    lo = std::min(lo, *opt.lo);
    hi = std::max(hi, *opt.hi);
  }
  if (opt.delta_min) {
    if (!(*opt.delta_min > 0)) throw PreconditionError("image: delta_min must be positive");
    q.delta_min = *opt.delta_min;
  } else {
    double scale = hi > lo ? hi - lo : std::max(1.0, std::fabs(lo));
    q.delta_min = std::exp2(std::floor(std::log2(scale)) - 26);
  }
  q.base = snapped_floor(lo / q.delta_min);
  std::int64_t top = snapped_floor(hi / q.delta_min);
  q.cells = static_cast<std::uint64_t>(top - q.base) + 1;
  if (q.cells > opt.max_cells) {
    throw PreconditionError("image: " + std::to_string(q.cells) + " cells exceed the limit of " +
                            std::to_string(opt.max_cells));
  }
  q.lo = static_cast<double>(q.base) * q.delta_min;
  q.hi = hi;
  q.bits.assign((q.cells + 63) / 64, 0);
  return q;
}

inline std::uint64_t cell_of(const QuantizedSet& q, double v) {
  std::int64_t g = snapped_floor(v / q.delta_min) - q.base;
  if (g < 0) g = 0;  // rounding at the very bottom of the range
  auto c = static_cast<std::uint64_t>(g);
  return std::min(c, q.cells - 1);
}

inline void count_population(QuantizedSet& q) {
  q.population = 0;
  for (auto w : q.bits) q.population += static_cast<std::uint64_t>(std::popcount(w));
}

}  // namespace detail

/// Quantized image f(A x B [x C]). Every tuple is evaluated once per pass:
/// a first pass finds the extremes (widening a declared range if needed),
/// the second sets bits in per-worker shards that are OR-merged, so the
/// result does not depend on the thread count.
inline QuantizedSet image_quantize(const FunctionSpec& f, const std::vector<PointSet1D>& sets,
                                   const ImageOptions& opt = {}) {
  auto ptrs = detail::check_sets(f, sets);
  CompiledExpr c(f.expr, f.vars);
  const std::uint64_t tuples = detail::tuple_count(ptrs);
  if (tuples == 0) throw PreconditionError("image: empty input set");
  const std::size_t n0 = ptrs[0]->size();
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n0)));

  struct Extremes {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::uint64_t outside = 0;
  };
  std::vector<Extremes> ext(threads);
  const bool declared = opt.lo && opt.hi;
  parallel_chunks(n0, threads, [&](std::size_t b, std::size_t e, unsigned w) {
    Extremes& x = ext[w];
    detail::stream_tuples(c, ptrs, b, e, [&](double v) {
      x.lo = std::min(x.lo, v);
      x.hi = std::max(x.hi, v);
      if (declared && (v < *opt.lo || v > *opt.hi)) ++x.outside;
    });
  });
  Extremes all;
  for (const auto& x : ext) {
    all.lo = std::min(all.lo, x.lo);
    all.hi = std::max(all.hi, x.hi);
    all.outside += x.outside;
  }
  QuantizedSet q = detail::layout(all.lo, all.hi, all.outside, tuples, opt);

  std::vector<std::vector<std::uint64_t>> shards(threads);
  parallel_chunks(n0, threads, [&](std::size_t b, std::size_t e, unsigned w) {
    auto& bits = shards[w];
    bits.assign(q.bits.size(), 0);
    detail::stream_tuples(c, ptrs, b, e, [&](double v) {
      std::uint64_t i = detail::cell_of(q, v);
      bits[i >> 6] |= std::uint64_t{1} << (i & 63);
    });
  });
  for (const auto& s : shards) {
    if (s.empty()) continue;
    for (std::size_t i = 0; i < q.bits.size(); ++i) q.bits[i] |= s[i];
  }
  detail::count_population(q);
  return q;
}

/// Oracle path: materialize every value, sort, deduplicate, then quantize.
/// Limited to kNaiveLimit tuples.
inline QuantizedSet image_quantize_naive(const FunctionSpec& f, const std::vector<PointSet1D>& sets,
                                         const ImageOptions& opt = {}) {
  auto ptrs = detail::check_sets(f, sets);
  CompiledExpr c(f.expr, f.vars);
  const std::uint64_t tuples = detail::tuple_count(ptrs);
  if (tuples == 0) throw PreconditionError("image: empty input set");
  if (tuples > kNaiveLimit) throw PreconditionError("image: naive path limited to 2^16 tuples");
  std::vector<double> values;
  values.reserve(tuples);
  detail::stream_tuples(c, ptrs, 0, ptrs[0]->size(), [&](double v) { values.push_back(v); });
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::uint64_t outside = 0;
  if (opt.lo && opt.hi) {
    // Duplicates count once per tuple, as in the streaming path.
    detail::stream_tuples(c, ptrs, 0, ptrs[0]->size(), [&](double v) { outside += v < *opt.lo || v > *opt.hi; });
  }
  QuantizedSet q = detail::layout(values.front(), values.back(), outside, tuples, opt);
  std::vector<std::uint64_t> cells;
  for (double v : values) cells.push_back(detail::cell_of(q, v));
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (auto i : cells) q.bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  detail::count_population(q);
  return q;
}

namespace detail {

inline std::int64_t multiple_of(const QuantizedSet& q, double delta) {
  if (!(delta >= q.delta_min * (1 - 1e-12))) throw PreconditionError("box counts: delta below delta_min");
  double s = delta / q.delta_min;
  double r = std::round(s);
  if (std::fabs(s - r) > 1e-9 * s) {
    throw PreconditionError("box counts: delta " + fmt(delta) + " is not a multiple of delta_min " + fmt(q.delta_min));
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace detail

/// Number of occupied delta-cells, cells anchored at q.lo.
inline std::uint64_t box_count(const QuantizedSet& q, double delta) {
  const std::int64_t s = detail::multiple_of(q, delta);
  std::uint64_t n = 0;
  std::int64_t last = -1;
  for (std::size_t w = 0; w < q.bits.size(); ++w) {
    std::uint64_t word = q.bits[w];
    while (word) {
      auto i = static_cast<std::int64_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(word)));
      word &= word - 1;
      std::int64_t cell = i / s;
      if (cell != last) {
        ++n;
        last = cell;
      }
    }
  }
  return n;
}

inline Ladder box_counts(const QuantizedSet& q, const std::vector<double>& deltas) {
  Ladder out;
  for (double d : deltas) out.push_back({d, box_count(q, d)});
  return out;
}

/// Occupied delta-cells of a point set, cells anchored at its lower end.
inline std::uint64_t box_count(const PointSet1D& p, double delta) {
  if (!(delta > 0)) throw PreconditionError("box counts: delta must be positive");
  std::uint64_t n = 0;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (double x : p.points) {  // sorted, so cells are non-decreasing
    std::int64_t cell = detail::snapped_floor((x - p.lo) / delta, (std::fabs(x) + std::fabs(p.lo)) / delta);
    if (cell != last) {
      ++n;
      last = cell;
    }
  }
  return n;
}

inline Ladder box_counts(const PointSet1D& p, const std::vector<double>& deltas) {
  Ladder out;
  for (double d : deltas) out.push_back({d, box_count(p, d)});
  return out;
}

/// delta_k = scale * ratio^k for k = k0..k1.
inline std::vector<double> geometric_ladder(double scale, double ratio, int k0, int k1) {
  if (!(ratio > 0 && ratio < 1)) throw PreconditionError("ladder: ratio must lie in (0, 1)");
  if (k1 < k0) throw PreconditionError("ladder: empty range");
  std::vector<double> d;
  for (int k = k0; k <= k1; ++k) d.push_back(scale * std::pow(ratio, k));
  return d;
}

struct DimOptions {
  int drop_coarse = 2;
  int drop_fine = 2;
  int min_rungs = 4;
};

struct DimEstimate {
  Ladder ladder;  // sorted by decreasing delta
  std::size_t window_begin = 0, window_end = 0;
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  bool degenerate = false;  // all counts in the window equal
  std::string note;

  std::size_t rungs() const { return window_end - window_begin; }
};

/// Least-squares slope of log N against log(1/delta) over the ladder minus
/// its coarsest and finest rungs.
inline DimEstimate dim_estimate(Ladder ladder, const DimOptions& opt = {}) {
  std::sort(ladder.begin(), ladder.end(), [](const Rung& a, const Rung& b) { return a.delta > b.delta; });
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i].delta > 0)) throw PreconditionError("dimension: delta must be positive");
    if (ladder[i].count == 0) throw PreconditionError("dimension: zero count");
    if (i > 0 && ladder[i].delta == ladder[i - 1].delta) throw PreconditionError("dimension: repeated delta");
    if (i > 0 && ladder[i].count < ladder[i - 1].count) {
      throw PreconditionError("dimension: counts decrease as delta decreases");
    }
  }
  DimEstimate d;
  d.ladder = ladder;
  auto n = static_cast<std::ptrdiff_t>(ladder.size());
  std::ptrdiff_t b = opt.drop_coarse, e = n - opt.drop_fine;
  if (e - b < opt.min_rungs) {
    throw PreconditionError("dimension: fit window has " + std::to_string(std::max<std::ptrdiff_t>(e - b, 0)) +
                            " rungs, need " + std::to_string(opt.min_rungs));
  }
  d.window_begin = static_cast<std::size_t>(b);
  d.window_end = static_cast<std::size_t>(e);
  double sx = 0, sy = 0;
  const double m = static_cast<double>(e - b);
  for (auto i = b; i < e; ++i) {
    sx += -std::log(ladder[static_cast<std::size_t>(i)].delta);
    sy += std::log(static_cast<double>(ladder[static_cast<std::size_t>(i)].count));
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto i = b; i < e; ++i) {
    double x = -std::log(ladder[static_cast<std::size_t>(i)].delta) - mx;
    double y = std::log(static_cast<double>(ladder[static_cast<std::size_t>(i)].count)) - my;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  d.slope = sxy / sxx;
  d.intercept = my - d.slope * mx;
  if (syy == 0) {
    d.degenerate = true;
    d.slope = 0;
    d.r2 = std::numeric_limits<double>::quiet_NaN();
    d.note = "all counts in the window are equal";
  } else {
    double res = 0;
    for (auto i = b; i < e; ++i) {
      double x = -std::log(ladder[static_cast<std::size_t>(i)].delta);
      double y = std::log(static_cast<double>(ladder[static_cast<std::size_t>(i)].count));
      double r = y - (d.intercept + d.slope * x);
      res += r * r;
    }
    d.r2 = 1 - res / syy;
  }
  return d;
}

/// N(delta) delta / (hi - lo), capped at 1.
inline double covered_fraction(const QuantizedSet& q, double delta) {
  if (!(q.hi > q.lo)) throw PreconditionError("covered fraction: empty range");
  double f = static_cast<double>(box_count(q, delta)) * delta / (q.hi - q.lo);
  return std::min(f, 1.0);
}

/// One input of an experiment: a generator plus an optional ladder for its
/// own dimension estimate.
struct ExperimentInput {
  PointSet1D set;
  std::vector<double> ladder;  // empty: dyadic ladder down to the point spacing
};

struct ExperimentConfig {
  FunctionSpec f;
  std::vector<ExperimentInput> inputs;
  std::vector<double> ladder;  // image ladder, absolute deltas
  Theorem theorem = Theorem::BivariateAnalytic;
  std::map<std::string, Rational> params;
  double slack = 0.05;
  ImageOptions image;
  DimOptions fit;
  std::optional<DegeneracyReport> classification;
};

struct InputSummary {
  std::string provenance;
  std::size_t points = 0;
  double declared_dimension = 0;
  std::optional<DimEstimate> estimate;
  std::string note;
};

struct ExperimentReport {
  std::vector<InputSummary> inputs;
  Rational declared_sum;  // sum of declared dimensions, rounded to 1e-12
  double declared_sum_value = 0;
  ThresholdReport thresholds;
  std::optional<Rational> lower_bound;
  DimEstimate image;
  std::vector<std::pair<double, double>> covered;  // (delta, covered fraction)
  std::uint64_t population = 0;
  std::uint64_t tuples = 0;
  std::uint64_t out_of_range = 0;
  double range_lo = 0, range_hi = 0, delta_min = 0;
  double slack = 0.05;
  bool pass = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<double> default_input_ladder(const PointSet1D& p) {
  const double w = p.hi - p.lo;
  double dim = p.dimension > 0 ? p.dimension : 1;
  int kmax = static_cast<int>(std::floor(std::log2(static_cast<double>(std::max<std::size_t>(p.size(), 2))) / dim));
  kmax = std::clamp(kmax, 1, 40);
  return geometric_ladder(w, 0.5, 1, kmax);
}

inline Rational approx_rational(double v) {
  // Declared dimensions are irrational in general; 1e-12 granularity keeps
  // the exact bound arithmetic meaningful without pretending more.
  constexpr std::int64_t kDen = 1000000000000;
  return Rational(static_cast<std::int64_t>(std::llround(v * static_cast<double>(kDen))), kDen);
}

}  // namespace detail

/// Image dimension estimate against the bound of the selected theorem.
inline ExperimentReport expansion_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.slack = cfg.slack;
  std::vector<PointSet1D> sets;
  for (const auto& in : cfg.inputs) sets.push_back(in.set);

  if (!cfg.classification) {
    rep.warnings.push_back("no classification supplied; the theorem hypotheses were not checked");
  } else {
    const auto& c = *cfg.classification;
    if (c.classification != Classification::Expanding) {
      rep.warnings.push_back(std::string("f is classified ") + to_string(c.classification) +
                             "; the expansion bound does not apply");
    }
    if (c.witness_box) {
      for (std::size_t i = 0; i < sets.size() && i < c.witness_box->size(); ++i) {
        const Interval& w = (*c.witness_box)[i];
        if (sets[i].lo < w.lo || sets[i].hi > w.hi) {
          rep.warnings.push_back("input " + std::to_string(i + 1) + " on [" + detail::fmt(sets[i].lo) + ", " +
                                 detail::fmt(sets[i].hi) + "] leaves the witness box [" + detail::fmt(w.lo) + ", " +
                                 detail::fmt(w.hi) + "]");
        }
      }
    }
  }

  double sum = 0;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const auto& in = cfg.inputs[i];
    InputSummary s;
    s.provenance = in.set.provenance;
    s.points = in.set.size();
    s.declared_dimension = in.set.dimension;
    sum += in.set.dimension;
    try {
      auto ladder = in.ladder.empty() ? detail::default_input_ladder(in.set) : in.ladder;
      s.estimate = dim_estimate(box_counts(in.set, ladder), cfg.fit);
    } catch (const PreconditionError& e) {
      s.note = e.what();
    }
    rep.inputs.push_back(std::move(s));
  }
  rep.declared_sum_value = sum;
  rep.declared_sum = detail::approx_rational(sum);
  rep.thresholds = thresholds(cfg.theorem, cfg.params);
  rep.lower_bound = rep.thresholds.dimension_lower_bound(rep.declared_sum);
  if (!rep.lower_bound) rep.warnings.push_back("theorem gives no expansion bound");

  // Without an explicit resolution, quantize at the finest rung when every
  // rung is a whole multiple of it, so non-dyadic ladders work out of the box.
  ImageOptions iopt = cfg.image;
  if (!iopt.delta_min && !cfg.ladder.empty()) {
    const double fine = *std::min_element(cfg.ladder.begin(), cfg.ladder.end());
    bool ok = fine > 0;
    for (double d : cfg.ladder) {
      const double s = d / fine;
      ok = ok && std::fabs(s - std::round(s)) <= 1e-9 * s;
    }
    if (ok) iopt.delta_min = fine;
  }
  QuantizedSet q = image_quantize(cfg.f, sets, iopt);
  rep.population = q.population;
  rep.tuples = q.tuples;
  rep.out_of_range = q.out_of_range;
  rep.range_lo = q.lo;
  rep.range_hi = q.hi;
  rep.delta_min = q.delta_min;
  if (q.out_of_range > 0) {
    rep.warnings.push_back(std::to_string(q.out_of_range) + " values fell outside the declared range; range widened");
  }
  rep.image = dim_estimate(box_counts(q, cfg.ladder), cfg.fit);
  if (q.hi > q.lo) {
    for (double d : cfg.ladder) rep.covered.emplace_back(d, covered_fraction(q, d));
  }
  double bound = rep.lower_bound ? rep.lower_bound->to_double() : 0.0;
  rep.pass = rep.image.slope >= bound - cfg.slack;
  return rep;
}

}  // namespace erlab
