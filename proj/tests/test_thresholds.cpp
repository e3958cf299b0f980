#include <gtest/gtest.h>

#include "erlab/thresholds.hpp"

using namespace erlab;

namespace {

// Independent oracle: thresholds in double precision from the closed forms.
struct Triple {
  double expansion, measure, interior;
};

Triple general_oracle(double a, double p, double b) {
  return {(a - p) / 2 + b, (a + p + 2 * b) / 2, (a - p) / 2 + 2 * p + b};
}

Triple kpoint_oracle(double a, double m) { return {a / 2 + m / 2 - 0.5, a / 2 + m / 2 + 0.5, a / 2 + m / 2 + 1.5}; }

}  // namespace

TEST(Thresholds, Bivariate) {
  auto r = thresholds(Theorem::BivariateAnalytic);
  EXPECT_EQ(*r.measure, Rational(5, 3));
  EXPECT_EQ(*r.expansion_offset, Rational(2, 3));
  EXPECT_EQ(r.expansion_form(), "sum > 2/3 + u");
  EXPECT_FALSE(r.interior.has_value());
  auto s = thresholds(Theorem::SmoothBivariate);
  EXPECT_EQ(*s.measure, Rational(5, 3));
  EXPECT_EQ(*s.expansion_offset, Rational(2, 3));
}

TEST(Thresholds, Trivariate) {
  auto r = thresholds(Theorem::TrivariateAnalytic);
  EXPECT_EQ(*r.expansion_offset, Rational(1));
  EXPECT_EQ(*r.measure, Rational(2));
}

TEST(Thresholds, Rank) {
  auto r = thresholds(Theorem::Rank, {{"dX", 2}, {"dY", 2}, {"r", 2}});
  EXPECT_EQ(*r.measure, Rational(3));
  EXPECT_EQ(*r.interior, Rational(4));
  EXPECT_EQ(*r.expansion_offset, Rational(2));
  EXPECT_THROW(thresholds(Theorem::Rank, {{"dX", 2}, {"dY", 1}, {"r", 2}}), PreconditionError);
  EXPECT_THROW(thresholds(Theorem::Rank, {{"dX", 2}, {"dY", 2}, {"r", 0}}), PreconditionError);
  EXPECT_THROW(thresholds(Theorem::Rank, {{"dX", 2}, {"dY", 2}}), PreconditionError);
  EXPECT_THROW(thresholds(Theorem::Rank, {{"dX", 2}, {"dY", 2}, {"r", 1}, {"q", 1}}), PreconditionError);
}

TEST(Thresholds, PhongSteinIsFullRank) {
  for (int d = 1; d <= 6; ++d) {
    auto p = thresholds(Theorem::PhongStein, {{"d", d}});
    auto r = thresholds(Theorem::Rank, {{"dX", d}, {"dY", d}, {"r", d}});
    EXPECT_EQ(*p.expansion_offset, *r.expansion_offset);
    EXPECT_EQ(*p.measure, *r.measure);
    EXPECT_EQ(*p.interior, *r.interior);
  }
}

TEST(Thresholds, GeneralMatchesOracle) {
  for (int a2 = 0; a2 <= 12; ++a2) {
    for (int p = 1; p <= 4; ++p) {
      for (int b6 = 0; b6 <= 6; ++b6) {
        Rational a(a2, 2), b(b6, 6);
        auto r = thresholds(Theorem::General, {{"alpha", a}, {"p", p}, {"beta", b}});
        Triple o = general_oracle(a2 / 2.0, p, b6 / 6.0);
        EXPECT_NEAR(r.expansion_offset->to_double(), o.expansion, 1e-12);
        EXPECT_NEAR(r.measure->to_double(), o.measure, 1e-12);
        EXPECT_NEAR(r.interior->to_double(), o.interior, 1e-12);
      }
    }
  }
}

TEST(Thresholds, KPointAndTwoPoint) {
  for (int a = 1; a <= 8; ++a) {
    for (int m = 0; m <= 4; ++m) {
      auto r = thresholds(Theorem::KPoint, {{"alpha", a}, {"m", m}});
      Triple o = kpoint_oracle(a, m);
      EXPECT_NEAR(r.expansion_offset->to_double(), o.expansion, 1e-12);
      EXPECT_NEAR(r.measure->to_double(), o.measure, 1e-12);
      EXPECT_NEAR(r.interior->to_double(), o.interior, 1e-12);
    }
  }
  auto t = thresholds(Theorem::TwoPoint, {{"dX", 2}, {"dY", 3}, {"m", 1}});
  EXPECT_EQ(*t.measure, Rational(7, 2));
  // k-point with alpha = 2 + 1 = 3 and m = 0 is the trivariate bound.
  auto k = thresholds(Theorem::KPoint, {{"alpha", 3}, {"m", 0}});
  EXPECT_EQ(*k.measure, *thresholds(Theorem::TrivariateAnalytic).measure);
}

TEST(Thresholds, MeasureExceedsExpansionByOne) {
  std::vector<std::pair<Theorem, std::map<std::string, Rational>>> cases = {
      {Theorem::BivariateAnalytic, {}},
      {Theorem::TrivariateAnalytic, {}},
      {Theorem::Rank, {{"dX", 3}, {"dY", 2}, {"r", 1}}},
      {Theorem::KPoint, {{"alpha", 5}, {"m", 2}}},
      {Theorem::DistanceSurface, {{"d", 3}}},
  };
  for (const auto& [t, p] : cases) {
    auto r = thresholds(t, p);
    EXPECT_EQ(*r.measure - *r.expansion_offset, Rational(1)) << r.name();
  }
}

TEST(Thresholds, DistanceSurfaceAndLookup) {
  auto r = thresholds(Theorem::DistanceSurface, {{"d", 2}});
  EXPECT_EQ(*r.measure, Rational(2));
  EXPECT_FALSE(r.interior.has_value());
  EXPECT_THROW(thresholds(Theorem::DistanceSurface, {{"d", 1}}), PreconditionError);
  for (const auto& i : theorem_table()) EXPECT_EQ(theorem_from_name(i.name), i.id);
  EXPECT_THROW(theorem_from_name("bogus"), PreconditionError);
}

TEST(Thresholds, DimensionLowerBoundClips) {
  auto r = thresholds(Theorem::BivariateAnalytic);
  EXPECT_EQ(*r.dimension_lower_bound(Rational(1, 2)), Rational(0));
  EXPECT_EQ(*r.dimension_lower_bound(Rational(1)), Rational(1, 3));
  EXPECT_EQ(*r.dimension_lower_bound(Rational(2)), Rational(1));
}
