#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "erlab/foldgeom.hpp"
#include "test_support.hpp"

using namespace erlab;

namespace {

FunctionSpec spec2(const char* t, double lo = 0.5, double hi = 1.5) { return make_spec(t, {"x", "y"}, lo, hi); }

// 4x4 determinant by cofactor expansion, independent of Eigen's LU.
double det4(const Eigen::Matrix4d& m) {
  auto det3 = [&](int r0, int r1, int r2, int c0, int c1, int c2) {
    return m(r0, c0) * (m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1)) -
           m(r0, c1) * (m(r1, c0) * m(r2, c2) - m(r1, c2) * m(r2, c0)) +
           m(r0, c2) * (m(r1, c0) * m(r2, c1) - m(r1, c1) * m(r2, c0));
  };
  double d = 0;
  int cols[4] = {0, 1, 2, 3};
  for (int j = 0; j < 4; ++j) {
    int c[3], k = 0;
    for (int t = 0; t < 4; ++t) {
      if (cols[t] != j) c[k++] = t;
    }
    d += (j % 2 ? -1 : 1) * m(0, j) * det3(1, 2, 3, c[0], c[1], c[2]);
  }
  return d;
}

}  // namespace

TEST(ImplicitPhi, Examples) {
  FunctionSpec f = spec2("x^2 + x*y");
  EXPECT_EQ(implicit_phi(f, 1, 1, 1, 1), 1.0);
  EXPECT_NEAR(implicit_phi(f, 1, 1, 1.1, 1), 1.31, 1e-12);
  FunctionSpec g = spec2("x*y", 1, 2);
  EXPECT_NEAR(implicit_phi(g, 1, 1, 2, 1), 2.0, 1e-12);
}

TEST(ImplicitPhi, MatchesClosedFormSolveOfLinearEquations) {
  // f = x^2 + x y is linear in y: phi = (x'^2 + x' y' - x^2) / x.
  FunctionSpec f = spec2("x^2 + x*y");
  std::mt19937_64 g(3);
  for (int i = 0; i < 100; ++i) {
    double x = 0.5 + testing_support::u01(g), yp = 0.5 + testing_support::u01(g), xp = 0.5 + testing_support::u01(g);
    double want = (xp * xp + xp * yp - x * x) / x;
    EXPECT_NEAR(implicit_phi(f, x, yp, xp, yp), want, 1e-11 * std::max(1.0, std::fabs(want)));
  }
}

TEST(ImplicitPhi, Errors) {
  FunctionSpec f = spec2("x + y^2", -1, 1);
  EXPECT_THROW(implicit_phi(f, 0, 0.5, 0, 0), NumericalError);  // f_y = 0 at the seed
  FunctionSpec h = spec2("x + sin(y)", 0, 1);
  EXPECT_THROW(implicit_phi(h, 0, 0, 3, 0.1), NumericalError);  // no solution
}

TEST(PhiPartials, Examples) {
  EXPECT_LT(phi_partials_check(spec2("x^2 + x*y"), 1, 1, 1), 1e-6);
  EXPECT_LT(phi_partials_check(spec2("x*y", 1, 2), 1, 1, 1), 1e-6);
  FoldModel m(spec2("x^2 + x*y"));
  // phi_x = -(2x + y)/x = -3 at (1, 1).
  double h = m.hx();
  double fd = (m.phi(1 + h, 1, 1, 1) - m.phi(1 - h, 1, 1, 1)) / (2 * h);
  EXPECT_NEAR(fd, -3.0, 1e-8);
  FoldModel xy(spec2("x*y", 1, 2));
  double hx = xy.hx();
  EXPECT_NEAR((xy.phi(1 + hx, 1, 1, 1) - xy.phi(1 - hx, 1, 1, 1)) / (2 * hx), -1.0, 1e-8);
}

TEST(PhiPartials, CorpusRandomConfigurations) {
  std::mt19937_64 g(11);
  for (const auto& c : testing_support::corpus()) {
    if (c.vars.size() != 2) continue;
    FoldModel m(c.spec());
    for (int i = 0; i < 20; ++i) {
      double x = 0.6 + 0.8 * testing_support::u01(g), y = 0.6 + 0.8 * testing_support::u01(g);
      double xp = x + 0.1 * (testing_support::u01(g) - 0.5);
      EXPECT_LT(phi_partials_check(m, x, y, xp), 1e-6) << c.text;
    }
  }
}

TEST(DetDg, Examples) {
  FunctionSpec f = spec2("x^2 + x*y");
  EXPECT_EQ(det_Dg(f, 1, 1, 1, 1), 0.0);
  double d = det_Dg(f, 1, 1, 1.2, 1);
  EXPECT_NEAR(d, -0.44, 1e-12);
  EXPECT_LT(std::fabs(d - det_Dg_numeric(f, 1, 1, 1.2, 1)) / std::fabs(d), 1e-6);
  EXPECT_NEAR(det_Dg(f, 1, 1, 1.2, 2), 2 * d, 1e-14);
}

TEST(DetDg, ClosedFormMatchesDifferenceJacobianOnRandomConfigurations) {
  std::mt19937_64 g(2024);
  const char* fs[] = {"x^2 + x*y", "x*y + y^2", "sin(x) + x*y", "x^2 + x*y + y^3"};
  int n = 0;
  for (const char* t : fs) {
    FoldModel m(spec2(t));
    for (int i = 0; i < 25; ++i, ++n) {
      double x = 0.6 + 0.8 * testing_support::u01(g), yp = 0.6 + 0.8 * testing_support::u01(g);
      double step = 0.05 + 0.25 * testing_support::u01(g);
      double xp = x + (x + step <= 1.5 ? step : -step);
      double theta = 0.5 + 2 * testing_support::u01(g);
      FoldConfig c{x, yp, xp, theta};
      double closed = m.det_closed(c);
      double fd = det4(m.dg_numeric(c));
      EXPECT_LT(std::fabs(closed - fd), 1e-5 * std::fabs(closed)) << t << " at " << x << "," << yp << "," << xp;
    }
  }
  EXPECT_EQ(n, 100);
}

TEST(DetDg, VanishesOnDiagonalForCorpus) {
  std::mt19937_64 g(8);
  for (const auto& c : testing_support::corpus()) {
    if (c.vars.size() != 2) continue;
    FoldModel m(c.spec());
    if (m.fxy_identically_zero()) continue;
    for (int i = 0; i < 10; ++i) {
      double x = 0.5 + testing_support::u01(g), y = 0.5 + testing_support::u01(g);
      EXPECT_EQ(m.det_closed({x, y, x, 1.0}), 0.0) << c.text;
    }
  }
}

TEST(FoldVerify, Examples) {
  auto r = fold_verify(spec2("x^2 + x*y"), 1, 1, 1);
  EXPECT_TRUE(r.verified()) << r.reason;
  EXPECT_DOUBLE_EQ(r.kappa, -2.0);
  EXPECT_DOUBLE_EQ(r.dx_det_predicted, 2.0);
  EXPECT_LT(r.dx_rel_error, 1e-4);

  auto d = fold_verify(spec2("x*y"), 1, 1, 1);
  EXPECT_EQ(d.verdict, FoldVerdict::Degenerate);
  EXPECT_EQ(d.reason, "kappa=0");

  auto s = fold_verify(spec2("x*y + y^2"), 1, 1, 1);
  EXPECT_TRUE(s.verified()) << s.reason;
  EXPECT_NEAR(s.dx_det_predicted, -2.0 / 9.0, 1e-15);
  EXPECT_NEAR(s.dx_det_fd, -2.0 / 9.0, 1e-6);
  EXPECT_NEAR(s.transversality, 3.0, 1e-15);
}

TEST(FoldVerify, ThetaScaling) {
  FoldModel m(spec2("x^2 + x*y"));
  auto a = fold_verify(m, 1, 1, 1), b = fold_verify(m, 1, 1, 2);
  EXPECT_NEAR(b.dx_det_fd, 2 * a.dx_det_fd, 1e-8);
  EXPECT_NEAR(b.det_probe, 2 * a.det_probe, 1e-12);
}

TEST(FoldVerify, CorpusAtClassifierWitness) {
  for (const auto& c : testing_support::corpus()) {
    if (c.vars.size() != 2) continue;
    auto r = fold_verify(c.spec());
    if (c.special) {
      EXPECT_EQ(r.verdict, FoldVerdict::Degenerate) << c.text;
    } else {
      EXPECT_TRUE(r.verified()) << c.text << ": " << r.reason;
    }
  }
}

TEST(FoldVerify, BatchMatchesSerial) {
  FoldModel m(spec2("sin(x) + x*y"));
  std::vector<std::array<double, 2>> bases;
  std::mt19937_64 g(4);
  for (int i = 0; i < 40; ++i) bases.push_back({0.6 + 0.8 * testing_support::u01(g), 0.6 + 0.8 * testing_support::u01(g)});
  auto par = fold_verify_batch(m, bases, 1.0, 4);
  for (std::size_t i = 0; i < bases.size(); ++i) {
    auto s = fold_verify(m, bases[i][0], bases[i][1], 1.0);
    EXPECT_EQ(par[i].verdict, s.verdict);
    EXPECT_EQ(par[i].dx_det_fd, s.dx_det_fd);
  }
}
