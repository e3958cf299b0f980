#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "erlab/dimlab.hpp"
#include "erlab/fractal.hpp"
#include "erlab/number.hpp"

using namespace erlab;

namespace {

CantorSpec cantor(int m, double r, int n, double lo = 0, double hi = 1) {
  CantorSpec s;
  s.m = m;
  s.r = r;
  s.n = n;
  s.lo = lo;
  s.hi = hi;
  return s;
}

}  // namespace

TEST(Cantor, TwoLevelMiddleThirds) {
  auto p = cantor_points(cantor(2, 1.0 / 3, 2));
  ASSERT_EQ(p.size(), 4u);
  const double want[] = {0, 2.0 / 9, 2.0 / 3, 8.0 / 9};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(p.points[static_cast<std::size_t>(i)], want[i], 1e-15);
  EXPECT_NEAR(p.dimension, std::log(2.0) / std::log(3.0), 1e-15);
}

TEST(Cantor, QuarterRatioLevelOne) {
  auto p = cantor_points(cantor(2, 0.25, 1));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.points[0], 0.0);
  EXPECT_NEAR(p.points[1], 0.75, 1e-15);
}

TEST(Cantor, ThreeBranchGapsMatchEnumeration) {
  auto p = cantor_points(cantor(3, 0.25, 2));
  ASSERT_EQ(p.size(), 9u);
  // Exact enumeration: offsets j * 3/8, second level scaled by 1/4.
  std::set<Rational> exact;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) exact.insert(Rational(3 * a, 8) + Rational(3 * b, 32));
  }
  ASSERT_EQ(exact.size(), 9u);
  Rational min_gap(1);
  auto it = exact.begin();
  std::size_t i = 0;
  for (auto prev = it++; it != exact.end(); prev = it++) min_gap = std::min(min_gap, *it - *prev);
  for (const auto& v : exact) EXPECT_NEAR(p.points[i++], v.to_double(), 1e-15);
  double gap = 1;
  for (std::size_t k = 1; k < p.size(); ++k) gap = std::min(gap, p.points[k] - p.points[k - 1]);
  EXPECT_EQ(min_gap, Rational(3, 32));
  EXPECT_NEAR(gap, min_gap.to_double(), 1e-15);
  // Space between neighbouring level-2 intervals of length 1/16.
  EXPECT_NEAR(gap - 1.0 / 16, 1.0 / 32, 1e-15);
}

TEST(Cantor, MidpointRuleShiftsByHalfTheFinalLength) {
  auto l = cantor_points(cantor(2, 1.0 / 3, 5));
  auto s = cantor(2, 1.0 / 3, 5);
  s.rule = Representative::Midpoint;
  auto m = cantor_points(s);
  ASSERT_EQ(l.size(), m.size());
  for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(m.points[i] - l.points[i], 0.5 * std::pow(3.0, -5), 1e-15);
  EXPECT_NE(l.hash, m.hash);
}

TEST(Cantor, StrictlyIncreasingInsideInterval) {
  for (auto s : {cantor(2, 1.0 / 3, 12, 0.5, 1.5), cantor(3, 1.0 / 3, 8), cantor(2, 0.5, 10, -1, 1),
                 cantor(5, 0.1, 6, 2, 7)}) {
    auto p = cantor_points(s);
    EXPECT_EQ(p.size(), static_cast<std::size_t>(std::pow(s.m, s.n)));
    EXPECT_NO_THROW(p.validate());
  }
}

TEST(Cantor, NestingAcrossLevels) {
  for (auto [m, r] : {std::pair{2, 1.0 / 3}, std::pair{3, 0.25}, std::pair{2, 0.4}}) {
    for (int n = 1; n < 8; ++n) {
      auto a = cantor_points(cantor(m, r, n, 0.5, 1.5));
      auto b = cantor_points(cantor(m, r, n + 1, 0.5, 1.5));
      const double reach = std::pow(r, n) * 1.0 + 1e-12;
      for (double x : b.points) {
        auto it = std::lower_bound(a.points.begin(), a.points.end(), x);
        double d = 1e300;
        if (it != a.points.end()) d = std::min(d, std::fabs(*it - x));
        if (it != a.points.begin()) d = std::min(d, std::fabs(*std::prev(it) - x));
        EXPECT_LE(d, reach) << m << " " << r << " " << n;
      }
    }
  }
}

// Exact counts need the pieces to sit on the r^k grid, i.e. the offset
// (1 - r) / (m - 1) a multiple of r. Otherwise a piece can straddle a cell.
TEST(Cantor, SelfSimilarCounts) {
  for (auto s : {cantor(2, 1.0 / 3, 10), cantor(3, 0.2, 7, 2, 5), cantor(2, 0.25, 9, -1, 3), cantor(4, 1.0 / 7, 6)}) {
    auto p = cantor_points(s);
    for (int k = 0; k <= s.n; ++k) {
      double delta = std::pow(s.r, k) * (s.hi - s.lo);
      EXPECT_EQ(box_count(p, delta), static_cast<std::uint64_t>(std::llround(std::pow(s.m, k))))
          << p.provenance << " k=" << k;
    }
  }
}

TEST(Cantor, MisalignedPiecesStraddleCells) {
  auto p = cantor_points(cantor(3, 0.25, 4));
  EXPECT_EQ(box_count(p, 0.25), 4u);  // the middle piece [3/8, 5/8] covers two cells
}

TEST(Cantor, ThreadCountDoesNotChangePoints) {
  auto a = cantor_points(cantor(3, 0.3, 9), 1);
  auto b = cantor_points(cantor(3, 0.3, 9), 4);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.hash, b.hash);
}

TEST(Cantor, RejectsBadSpecsAndBudget) {
  EXPECT_THROW(cantor_points(cantor(1, 0.5, 3)), PreconditionError);
  EXPECT_THROW(cantor_points(cantor(2, 0.6, 3)), PreconditionError);
  EXPECT_THROW(cantor_points(cantor(2, 0.3, 0)), PreconditionError);
  EXPECT_THROW(cantor_points(cantor(2, 0.3, 3, 1, 1)), PreconditionError);
  EXPECT_THROW(cantor_points(cantor(2, 0.3, 40)), PreconditionError);
  EXPECT_THROW(cantor_points(cantor(2, 0.3, 11), 1, 1000), PreconditionError);
}

TEST(Digits, Examples) {
  DigitSpec s;
  s.base = 4;
  s.digits = {0, 1};
  s.n = 1;
  auto p = digit_points(s);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.points[1], 0.25);
  s.n = 8;
  p = digit_points(s);
  EXPECT_EQ(p.size(), 256u);
  EXPECT_DOUBLE_EQ(p.dimension, 0.5);
}

TEST(Digits, MiddleThirdsEndpointsMatchCantor) {
  DigitSpec s;
  s.base = 3;
  s.digits = {2, 0};
  s.n = 9;
  auto d = digit_points(s);
  auto c = cantor_points(cantor(2, 1.0 / 3, 9));
  ASSERT_EQ(d.size(), c.size());
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d.points[i], c.points[i], 1e-15);
  EXPECT_NEAR(d.dimension, 0.6309297535714574, 1e-15);
}

TEST(Digits, SingleDigitHasDimensionZero) {
  DigitSpec s;
  s.base = 5;
  s.digits = {3};
  s.n = 4;
  auto p = digit_points(s);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.dimension, 0.0);
  EXPECT_NEAR(p.points[0], 3 * (0.2 + 0.04 + 0.008 + 0.0016), 1e-15);
}

TEST(Digits, RejectsBadDigitSets) {
  DigitSpec s;
  s.digits = {0, 4};
  EXPECT_THROW(digit_points(s), PreconditionError);
  s.digits = {1, 1};
  EXPECT_THROW(digit_points(s), PreconditionError);
  s.digits = {};
  EXPECT_THROW(digit_points(s), PreconditionError);
}

TEST(SimilarityDimension, Examples) {
  EXPECT_NEAR(similarity_dimension(2, 1.0 / 3), 0.6309297535714574, 1e-15);
  EXPECT_DOUBLE_EQ(similarity_dimension(2, 0.25), 0.5);
  EXPECT_NEAR(similarity_dimension(3, 0.25), std::log(3.0) / std::log(4.0), 1e-15);
  EXPECT_EQ(similarity_dimension(1, 0.5), 0.0);
  EXPECT_THROW(similarity_dimension(2, 1.0), PreconditionError);
  EXPECT_THROW(similarity_dimension(0.5, 0.5), PreconditionError);
}

TEST(SimilarityDimension, TargetingRoundTrips) {
  for (double a : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    double r = ratio_for_dimension(a);
    EXPECT_NEAR(similarity_dimension(2, r), a, 1e-14);
  }
  EXPECT_NEAR(ratio_for_dimension(0.7), std::pow(2.0, -10.0 / 7), 1e-16);
  EXPECT_THROW(ratio_for_dimension(0), PreconditionError);
}
