#include <gtest/gtest.h>

#include "support.hpp"

using namespace ntnf;
using namespace ntnf::testing;

namespace {

constexpr int W = 60;

double x2(const JetPoly& p) { return p.coeff(Monomial::from({2}))(0); }

}  // namespace

TEST(CenterManifold, StableParabola) {
  auto sys = parabola_system(0.5, W);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 4, 1e-13);
  EXPECT_NEAR(x2(cm.phi.at(0)), 2.0, 1e-12);
  EXPECT_EQ(cm.phi.at(0).terms().size(), 1u);
  EXPECT_LE(cm.residual, 1e-13);
}

TEST(CenterManifold, UnstableParabola) {
  auto sys = parabola_system(2.0, W);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(2.0, -W, W), 4, 1e-13);
  EXPECT_NEAR(x2(cm.phi.at(5)), -1.0, 1e-12);
}

TEST(CenterManifold, LinearSystemHasFlatManifold) {
  VarLayout l = VarLayout::split(1, 1, 0);
  Matrix a = Matrix::Identity(2, 2);
  a(0, 0) = 0.5;
  NonlinearSystem sys(constant_cocycle(a, W), TimeJetSeq(-W, W, JetPoly(l, l, 3)));
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 3, 1e-13);
  EXPECT_EQ(cm.bound, 0.0);
}

TEST(CenterManifold, NonautonomousMatchesDenseIteration) {
  const double wob = 0.1;
  auto sys = parabola_system(0.5, W, wob);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 3, 1e-13);
  // c_{n+1} = 0.5 c_n + b_n, iterated from far in the past
  std::vector<double> c;
  double v = 0;
  for (int n = -400; n <= W; ++n) {
    if (n >= -W) c.push_back(v);
    v = 0.5 * v + 1.0 + wob * std::cos(n);
  }
  for (int n = cm.trusted_lo(); n <= cm.trusted_hi(); ++n) EXPECT_NEAR(x2(cm.phi.at(n)), c[n + W], 1e-10) << n;
  EXPECT_LE(cm.residual, 1e-12);
}

TEST(CenterManifold, GapViolationIsAnError) {
  auto sys = parabola_system(0.5, W);
  TrichotomyRates r{0.7, 0.7, 0.8, 1.25, 4, 4};  // 0.7 >= 0.8^2
  try {
    center_manifold_jets(sys, coordinate_trichotomy(1, 1, 0, -W, W, r), 2, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::gap);
  }
}

TEST(Invariance, ExactJetHasNoResidual) {
  auto sys = parabola_system(0.5, W);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 2, 1e-13);
  auto rep = verify_center_invariance(sys, cm, {0.5, 0.1, 0.01});
  for (const auto& row : rep.rows) EXPECT_LE(row.residual, 1e-12) << row.radius;
}

TEST(Invariance, FlatJetMissesTheQuadratic) {
  auto sys = parabola_system(0.5, W);
  CenterManifoldJets cm;
  cm.order = 1;
  cm.phi = TimeJetSeq(-W, W, JetPoly(VarLayout::split(0, 1, 0), VarLayout::split(1, 0, 0), 1));
  auto rep = verify_center_invariance(sys, cm, {0.3, 0.1});
  EXPECT_NEAR(rep.rows[0].residual, 0.09, 1e-15);
  EXPECT_NEAR(rep.rows[1].residual, 0.01, 1e-15);
}

TEST(Invariance, OrbitGrowthConstantsAreModerate) {
  auto sys = parabola_system(0.5, W, 0.1);
  TrichotomyData t = parabola_trichotomy(0.5, -W, W);
  auto cm = center_manifold_jets(sys, t, 4, 1e-13);
  auto rep = verify_center_invariance(sys, cm, {0.01}, 0, 0, &t.rates);
  EXPECT_GT(rep.gamma1, 0.5);
  EXPECT_LT(rep.gamma1, 1.0);
  EXPECT_LE(rep.forward_constant, 2.0);
  EXPECT_LE(rep.backward_constant, 2.0);
}

TEST(Straighten, FlatManifoldLeavesSystemUnchanged) {
  VarLayout l = VarLayout::split(1, 1, 0);
  Matrix a = Matrix::Identity(2, 2);
  a(0, 0) = 0.5;
  JetPoly f(l, l, 3);
  f.add_term(Monomial::from({1, 1}), 1, 0.3);
  NonlinearSystem sys(constant_cocycle(a, W), TimeJetSeq(-W, W, f));
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 3, 1e-13);
  auto st = straighten(sys, cm);
  EXPECT_LE(max_abs_diff(st.full_map(0), sys.full_map(0)), 1e-15);
}

TEST(Straighten, ParabolaBecomesInvariantAxis) {
  auto sys = parabola_system(0.5, W);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 2, 1e-13);
  auto st = straighten(sys, cm);
  JetPoly rows = hyperbolic_rows(st.full_map(0));
  const VarLayout& l = st.layout();
  for (const auto& [m, c] : rows.terms())
    if (v_degree(m, l) == 0) EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Straighten, NonautonomousInterior) {
  auto sys = parabola_system(0.5, W, 0.1);
  auto cm = center_manifold_jets(sys, parabola_trichotomy(0.5, -W, W), 4, 1e-13);
  auto st = straighten(sys, cm);
  const VarLayout& l = st.layout();
  double worst = 0;
  for (int n = cm.trusted_lo(); n < cm.trusted_hi(); ++n) {
    JetPoly rows = hyperbolic_rows(st.full_map(n));
    for (const auto& [m, c] : rows.terms())
      if (v_degree(m, l) == 0) worst = std::max(worst, c.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}
