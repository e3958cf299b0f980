#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "erlab/degeneracy.hpp"
#include "erlab/parse.hpp"
#include "test_support.hpp"

using namespace erlab;

namespace {

FunctionSpec spec2(const char* t, double lo = 0.5, double hi = 1.5) { return make_spec(t, {"x", "y"}, lo, hi); }
FunctionSpec spec3(const char* t, double lo = 0.5, double hi = 1.5) { return make_spec(t, {"x", "y", "z"}, lo, hi); }

bool same(const Expr& a, const char* b) { return simplify(a - parse(b)).is_zero(); }

using testing_support::gauss_det;
using testing_support::random_cubic3;
using testing_support::rows_of;

}  // namespace

TEST(Rho, Examples) {
  EXPECT_TRUE(same(rho(spec2("x*y")), "x*y"));
  EXPECT_TRUE(same(rho(spec2("x^2 + x*y")), "2*x^2 + x*y"));
  EXPECT_THROW(rho(spec2("x + y")), AdditivelyDegenerate);
}

TEST(Kappa, Examples) {
  EXPECT_TRUE(kappa(spec2("x*y")).is_zero());
  Expr k = kappa(spec2("x^2 + x*y"));
  EXPECT_TRUE(same(k, "-2*x^2")) << k;
  EXPECT_DOUBLE_EQ(evaluate(k, {{"x", "y"}, {1, 1}}), -2.0);
  EXPECT_TRUE(kappa(spec2("x + y + x*y")).is_zero());
  EXPECT_TRUE(same(kappa(spec2("x*y + y^2")), "2*y^2"));
}

TEST(Auxiliary, Examples) {
  auto a = aux_trivariate(spec3("x*y*z", 1, 2));
  EXPECT_TRUE(a.g1.is_zero() && a.g2.is_zero() && a.g3.is_zero());
  auto b = aux_trivariate(spec3("x*(y+z)"));
  EXPECT_TRUE(b.g1.is_zero());
  EXPECT_TRUE(same(b.g2, "x"));
  EXPECT_TRUE(same(b.g3, "-x"));
  auto c = aux_trivariate(spec3("x + y + z"));
  EXPECT_TRUE(c.g1.is_zero() && c.g2.is_zero() && c.g3.is_zero());
  auto d = aux_trivariate(spec3("x*y + y*z + z*x"));
  EXPECT_TRUE(same(d.g1, "y - z"));
  EXPECT_DOUBLE_EQ(evaluate(d.g1, {{"x", "y", "z"}, {1, 2, 3}}), -1.0);
}

TEST(Auxiliary, ThirdIsDifferenceOfFirstTwoOnCorpus) {
  for (const auto& c : testing_support::corpus()) {
    if (c.vars.size() != 3) continue;
    auto a = aux_trivariate(c.spec());
    EXPECT_TRUE(simplify(a.g3 - a.g1 + a.g2).is_zero()) << c.text;
  }
}

TEST(MixedHessian, Examples) {
  FunctionSpec dot = make_spec("x1*y1 + x2*y2", {"x1", "x2", "y1", "y2"}, 0, 1);
  ExprMatrix h = mixed_hessian(dot, two_point_groups(2, 4), {0}, {1});
  ASSERT_EQ(h.rows(), 2u);
  EXPECT_TRUE(h(0, 0).is_one() && h(1, 1).is_one() && h(0, 1).is_zero() && h(1, 0).is_zero());

  FunctionSpec dist = make_spec("(x1-y1)^2 + (x2-y2)^2", {"x1", "x2", "y1", "y2"}, 0, 1);
  ExprMatrix hd = mixed_hessian(dist, two_point_groups(2, 4), {0}, {1});
  EXPECT_TRUE(same(hd(0, 0), "-2"));
  EXPECT_TRUE(same(hd(1, 1), "-2"));
  EXPECT_TRUE(hd(0, 1).is_zero());

  FunctionSpec sep = make_spec("exp(x1) + x2^3 + sin(y1) + y2", {"x1", "x2", "y1", "y2"}, 0, 1);
  ExprMatrix hs = mixed_hessian(sep, two_point_groups(2, 4), {0}, {1});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_TRUE(hs(i, j).is_zero());
  }
  EXPECT_THROW(mixed_hessian(dot, two_point_groups(2, 4), {}, {1}), PreconditionError);
}

TEST(AssembleJ, TrivariateDeterminantsFactor) {
  FunctionSpec f = spec3("x*y + y*z + z*x");
  Auxiliary3 g = aux_trivariate(f);
  const Expr gi[3] = {g.g1, g.g2, g.g3};
  auto groups = singleton_groups(3);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<std::size_t> fset = {i}, eset;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != i) eset.push_back(k);
    }
    JMatrix j = assemble_J(f, groups, eset, fset);
    ASSERT_EQ(j.matrix.rows(), 4u);
    ASSERT_EQ(j.matrix.cols(), 4u);
    Expr q = symbolic_det(j.matrix);
    Expr expected = -gi[i] * primed_copy(gi[i], f.vars);
    EXPECT_TRUE(is_identically_zero(q - expected, j.vars, j.box).zero()) << "Q" << i + 1;
  }
}

TEST(AssembleJ, SharpnessExampleAndSeparable) {
  FunctionSpec f = spec3("x*(y+z)");
  JMatrix j = assemble_J(f, singleton_groups(3), {0, 1}, {2});
  std::vector<double> ones(6, 1.0);
  EXPECT_NEAR(evaluate(j.matrix, j.vars, ones).determinant(), -1.0, 1e-14);

  FunctionSpec sep = make_spec("exp(x) + y^2", {"x", "y"}, 0.5, 1.5);
  JMatrix t = assemble_two_point(sep, 1);
  EXPECT_TRUE(symbolic_det(t.matrix).is_zero());
  EXPECT_THROW(assemble_J(f, singleton_groups(3), {0, 1, 2}, {2}), PreconditionError);
  EXPECT_THROW(assemble_J(f, singleton_groups(3), {0, 5}, {2}), PreconditionError);
}

TEST(AssembleJ, TwoPointLayout) {
  FunctionSpec phi = make_spec("x1*y1 + x2*y2^2", {"x1", "x2", "y1"  , "y2"}, 0.5, 1.5);
  JMatrix j = assemble_two_point(phi, 2);
  ASSERT_EQ(j.matrix.rows(), 5u);
  ASSERT_EQ(j.matrix.cols(), 5u);
  EXPECT_TRUE(j.matrix(0, 0).is_zero());
  EXPECT_TRUE(same(j.matrix(0, 1), "x1"));               // d/dy1 Phi(x, y)
  EXPECT_TRUE(same(j.matrix(0, 3), "-y1'"));             // -d/dx1' Phi(x', y')
  EXPECT_TRUE(same(j.matrix(2, 2), "2*y2"));             // d2/dx2 dy2 Phi(x, y)
  EXPECT_TRUE(same(j.matrix(3, 0), "x1'"));              // d/dy1' Phi(x', y')
}

TEST(AssembleJ, DeterminantMatchesProductOfAuxiliariesOnRandomCubics) {
  std::mt19937_64 g(5150);
  for (int n = 0; n < 20; ++n) {
    FunctionSpec f{random_cubic3(g), {"x", "y", "z"}, Box(3, Interval{-1, 1})};
    Auxiliary3 a = aux_trivariate(f);
    const Expr gi[3] = {a.g1, a.g2, a.g3};
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<std::size_t> eset;
      for (std::size_t k = 0; k < 3; ++k) {
        if (k != i) eset.push_back(k);
      }
      JMatrix j = assemble_J(f, singleton_groups(3), eset, {i});
      CompiledMatrix cm(j.matrix, j.vars);
      CompiledExpr ge(gi[i], f.vars);
      for (int k = 0; k < 20; ++k) {
        std::vector<double> p(6), x(3), y(3);
        for (int c = 0; c < 6; ++c) p[static_cast<std::size_t>(c)] = -1 + 2 * testing_support::u01(g);
        std::copy(p.begin(), p.begin() + 3, x.begin());
        std::copy(p.begin() + 3, p.end(), y.begin());
        double q = gauss_det(rows_of(cm(p)));
        double want = -ge(x) * ge(y);
        EXPECT_LE(std::fabs(q - want), 1e-9 * std::max(1.0, std::fabs(want))) << to_string(f.expr);
      }
    }
  }
}

TEST(MongeAmpere, Examples) {
  FunctionSpec xy = make_spec("x*y", {"x", "y"}, 0.5, 1.5);
  EXPECT_TRUE(same(monge_ampere(xy, 1), "-x*y"));
  FunctionSpec sum = make_spec("x + y", {"x", "y"}, 0.5, 1.5);
  EXPECT_TRUE(same(monge_ampere(sum, 1), "-1"));
  FunctionSpec sep = make_spec("x1^2 + exp(x2) + y1*y2 + sin(y2)", {"x1", "x2", "y1", "y2"}, 0.5, 1.5);
  EXPECT_TRUE(monge_ampere(sep, 2).is_zero());
  EXPECT_THROW(monge_ampere(sep, 1), PreconditionError);
}

TEST(Corank, Examples) {
  EXPECT_EQ(numeric_corank(Eigen::MatrixXd::Identity(3, 3)).corank, 0);
  EXPECT_EQ(numeric_corank(Eigen::MatrixXd::Zero(2, 3)).corank, 2);
  FunctionSpec f = spec3("x*y + z", 1, 2);
  JMatrix j = assemble_J(f, singleton_groups(3), {1, 2}, {0});
  std::vector<double> ones(6, 1.0);
  EXPECT_NEAR(evaluate(j.matrix, j.vars, ones).determinant(), -1.0, 1e-14);
  EXPECT_EQ(numeric_corank(j.matrix, j.vars, ones).corank, 0);
  EXPECT_THROW(numeric_corank(Eigen::MatrixXd::Identity(2, 2), 0.0), PreconditionError);
}

TEST(Corank, ExactRankDefectOnIntegerMatricesAndMonotoneInTol) {
  std::mt19937_64 g(77);
  for (int n = 0; n < 200; ++n) {
    int rows = 2 + static_cast<int>(g() % 4), cols = 2 + static_cast<int>(g() % 4);
    int rank = 1 + static_cast<int>(g() % static_cast<unsigned>(std::min(rows, cols)));
    // Product of integer factors with small entries has rank exactly `rank`
    // for generic draws; the exact rank comes from fraction-free elimination.
    Eigen::MatrixXd a(rows, rank), b(rank, cols);
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < rank; ++k) a(i, k) = static_cast<double>(static_cast<int>(g() % 5) - 2);
    }
    for (int k = 0; k < rank; ++k) {
      for (int j = 0; j < cols; ++j) b(k, j) = static_cast<double>(static_cast<int>(g() % 5) - 2);
    }
    Eigen::MatrixXd m = a * b;
    if (m.cwiseAbs().maxCoeff() > 10) continue;
    // Exact rank by Bareiss elimination over integers.
    std::vector<std::vector<long long>> w(static_cast<std::size_t>(rows), std::vector<long long>(static_cast<std::size_t>(cols)));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<long long>(m(i, j));
    }
    int exact_rank = 0;
    long long prev = 1;
    std::vector<bool> used(static_cast<std::size_t>(rows), false);
    for (int c = 0; c < cols && exact_rank < rows; ++c) {
      int piv = -1;
      for (int r = 0; r < rows; ++r) {
        if (!used[static_cast<std::size_t>(r)] && w[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] != 0) {
          piv = r;
          break;
        }
      }
      if (piv < 0) continue;
      used[static_cast<std::size_t>(piv)] = true;
      auto& pr = w[static_cast<std::size_t>(piv)];
      for (int r = 0; r < rows; ++r) {
        if (used[static_cast<std::size_t>(r)]) continue;
        auto& rr = w[static_cast<std::size_t>(r)];
        for (int k = c + 1; k < cols; ++k) {
          rr[static_cast<std::size_t>(k)] =
              (pr[static_cast<std::size_t>(c)] * rr[static_cast<std::size_t>(k)] -
               rr[static_cast<std::size_t>(c)] * pr[static_cast<std::size_t>(k)]) / prev;
        }
        rr[static_cast<std::size_t>(c)] = 0;
      }
      prev = pr[static_cast<std::size_t>(c)];
      ++exact_rank;
    }
    EXPECT_EQ(numeric_corank(m).corank, std::min(rows, cols) - exact_rank);
    int last = -1;
    for (double tol : {1e-14, 1e-12, 1e-9, 1e-6, 1e-3, 0.1, 0.5, 0.99}) {
      int c = numeric_corank(m, tol).corank;
      EXPECT_GE(c, last);
      last = c;
    }
  }
}

TEST(Classify, CorpusBivariate) {
  auto r = classify(spec2("x + y + x*y"));
  EXPECT_EQ(r.classification, Classification::SpecialForm);
  auto e = classify(spec2("x^2 + x*y"));
  ASSERT_EQ(e.classification, Classification::Expanding);
  const auto* k = e.find("kappa");
  ASSERT_NE(k, nullptr);
  EXPECT_EQ(k->witness, (std::vector<double>{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(k->witness_value, -2.0);
  EXPECT_EQ(k->status, CertificateStatus::Status::NonvanishingOnBox);
  ASSERT_TRUE(e.witness_box.has_value());
  EXPECT_TRUE(box_contains(*e.witness_box, e.witness_point));
}

TEST(Classify, CorpusTrivariate) {
  auto r = classify(spec3("x*y + y*z + z*x"));
  ASSERT_EQ(r.classification, Classification::Expanding);
  ASSERT_GE(r.i0, 1);
  const auto* g1 = r.find("G1");
  ASSERT_NE(g1, nullptr);
  EXPECT_EQ(g1->status, CertificateStatus::Status::VanishesSomewhere);
  ASSERT_EQ(g1->witness.size(), 3u);
  EXPECT_NEAR(g1->witness_value, g1->witness[1] - g1->witness[2], 1e-14);
  EXPECT_NE(g1->witness_value, 0.0);
  // G_{i0} keeps its sign on the witness box.
  const auto* gi = r.find("G" + std::to_string(r.i0));
  CompiledExpr ce(gi->expr, {"x", "y", "z"});
  double ref = ce(r.witness_point);
  std::mt19937_64 g(1);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> p = sample_box(*r.witness_box, g);
    EXPECT_GT(ce(p) * ref, 0.0);
  }
}

TEST(Classify, FullCorpus) {
  for (const auto& c : testing_support::corpus()) {
    auto r = classify(c.spec());
    EXPECT_EQ(r.classification, c.special ? Classification::SpecialForm : Classification::Expanding) << c.text;
    if (!c.special) {
      EXPECT_FALSE(r.witness_point.empty()) << c.text;
    }
  }
}

TEST(Classify, WedgeOrientationDoesNotMatter) {
  ClassifyOptions flipped;
  flipped.flip_wedge = true;
  for (const auto& c : testing_support::corpus()) {
    if (c.vars.size() != 2) continue;
    EXPECT_EQ(classify(c.spec()).classification, classify(c.spec(), flipped).classification) << c.text;
  }
}

TEST(Classify, InconclusiveWhenMostlyUndefined) {
  auto r = classify(make_spec("log(x - 1.4) * y + x", {"x", "y"}, 0.5, 1.5));
  EXPECT_EQ(r.classification, Classification::Inconclusive);
}

TEST(Gamma, HoldsForNondegenerateTrivariate) {
  FunctionSpec f = spec3("x*y + z", 1, 2);
  GammaOptions opt;
  opt.samples = 200;
  auto r = gamma_nondegenerate(f, singleton_groups(3), {1, 2}, {0}, 0, opt);
  EXPECT_TRUE(r.holds()) << r.reason;
  EXPECT_EQ(r.max_corank, 0);
  EXPECT_GE(r.off_diagonal * 2, r.samples);
}

TEST(Gamma, ViolatedForSpecialForm) {
  FunctionSpec f = spec3("x + y + z");
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<std::size_t> e;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != i) e.push_back(k);
    }
    auto r = gamma_nondegenerate(f, singleton_groups(3), e, {i}, 0);
    EXPECT_FALSE(r.holds());
    EXPECT_GE(r.witness_corank, 1);
  }
}

TEST(Gamma, ThreadCountDoesNotChangeResult) {
  FunctionSpec f = spec3("x*y + y*z + z*x");
  GammaOptions a, b;
  b.threads = 4;
  auto ra = gamma_nondegenerate(f, singleton_groups(3), {1, 2}, {0}, 0, a);
  auto rb = gamma_nondegenerate(f, singleton_groups(3), {1, 2}, {0}, 0, b);
  EXPECT_EQ(ra.verdict, rb.verdict);
  EXPECT_EQ(ra.max_corank, rb.max_corank);
  EXPECT_EQ(ra.witness, rb.witness);
  EXPECT_EQ(ra.off_diagonal, rb.off_diagonal);
}

TEST(SurfaceDistance, Examples) {
  std::vector<Expr> line = {var("u"), Expr(0)};
  auto a = surface_distance_check(line, {"u"}, {0, 1}, {0});
  EXPECT_FALSE(a.tangent);
  EXPECT_NEAR(a.det, 1.0, 1e-15);
  auto b = surface_distance_check(line, {"u"}, {1, 0}, {0});
  EXPECT_TRUE(b.tangent);
  std::vector<Expr> circle = {cos(var("u")), sin(var("u"))};
  for (double u : {0.0, 0.3, 1.7, -2.2}) {
    auto c = surface_distance_check(circle, {"u"}, {0, 0}, {u});
    EXPECT_FALSE(c.tangent);
    EXPECT_NEAR(c.det, 1.0, 1e-14);
  }
  std::vector<Expr> cusp = {pow(var("u"), Expr(2)), pow(var("u"), Expr(3))};
  EXPECT_THROW(surface_distance_check(cusp, {"u"}, {1, 1}, {0}), PreconditionError);
}

TEST(SurfaceDistance, TangencyMatchesTwoPointMatrix) {
  // Phi(x, u) = |x - psi(u)|^2 on R^2 x R^1 with psi the unit circle: the
  // two-point matrix is singular exactly when x - psi(u) is tangent.
  FunctionSpec phi = make_spec("(x1 - cos(u))^2 + (x2 - sin(u))^2", {"x1", "x2", "u"}, -2, 2);
  JMatrix j = assemble_two_point(phi, 2);
  CompiledMatrix cm(j.matrix, j.vars);
  std::vector<Expr> circle = {cos(var("u")), sin(var("u"))};
  std::mt19937_64 g(9);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x = {-2 + 4 * testing_support::u01(g), -2 + 4 * testing_support::u01(g)};
    double u = -2 + 4 * testing_support::u01(g);
    std::vector<double> xp = {-2 + 4 * testing_support::u01(g), -2 + 4 * testing_support::u01(g)};
    double up = -2 + 4 * testing_support::u01(g);
    double dj = cm(std::vector<double>{x[0], x[1], u, xp[0], xp[1], up}).determinant();
    double b1 = surface_distance_check(circle, {"u"}, x, {u}).det;
    double b2 = surface_distance_check(circle, {"u"}, xp, {up}).det;
    // |det J| = 2^(2d) |b1 b2| with d = 2 (each gradient carries a factor 2).
    EXPECT_NEAR(std::fabs(dj), 16.0 * std::fabs(b1 * b2), 1e-9 * std::max(1.0, std::fabs(dj)));
  }
}
