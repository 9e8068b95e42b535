#include <gtest/gtest.h>

#include "support.hpp"

using namespace ntnf;
using namespace ntnf::testing;

namespace {

constexpr int W = 60;

// Linear system with the center row coupled to the stable variable, zero nonlinearity.
NonlinearSystem coupled_pair(double c) {
  VarLayout l = VarLayout::split(1, 1, 0);
  Matrix a(2, 2);
  a << 0.5, 0, c, 1;
  NonlinearSystem s(constant_cocycle(a, W), TimeJetSeq(-W, W, JetPoly(l, l, 2)));
  ensure_block_spectra(s);
  return s;
}

NonlinearSystem diag3(const JetPoly& f, double a = 0.5, double b = 2) {
  NonlinearSystem s(diagonal_cocycle({a, 1, b}, W), TimeJetSeq(-W, W, f));
  ensure_block_spectra(s);
  return s;
}

const TakensResult& demo_result() {
  static const TakensResult r = [] {
    DemoSystemOptions o;
    o.window = 160;
    return takens_normal_form(demo_system(o), 3, 3, 1e-12);
  }();
  return r;
}

// Demo system straightened along its center manifold, jets truncated at order 3.
NonlinearSystem straightened_demo() {
  DemoSystemOptions o;
  o.window = 160;
  NonlinearSystem s = demo_system(o);
  ensure_block_spectra(s);
  TimeJetSeq f(s.lo(), s.hi(), JetPoly(s.layout(), s.layout(), 3));
  for (int n = s.lo(); n <= s.hi(); ++n) f.at(n) += s.nonlinearity().at(n).with_order(3);
  NonlinearSystem cur = s.with_nonlinearity(f);
  auto cm = center_manifold_jets(cur, detail::block_trichotomy(cur), 3, 1e-12);
  return conjugate(cur, straightening_transform(cm, cur.layout(), 3));
}

}  // namespace

TEST(CenterStage, ClosedFormCoupling) {
  const double c = 0.3;
  auto sys = coupled_pair(c);
  auto [out, t] = eliminate_center_order(sys, 1, 1, 1e-13);
  // T(s, x_c) = (s, x_c + 2c s)
  EXPECT_NEAR(coeff(t.at(0), {1, 0}, 1), 2 * c, 1e-12);
  JetPoly g = out.full_map(0);
  EXPECT_NEAR(coeff(g, {1, 0}, 0), 0.5, 1e-15);
  EXPECT_NEAR(coeff(g, {0, 1}, 1), 1.0, 1e-15);
  EXPECT_LE(std::abs(coeff(g, {1, 0}, 1)), 1e-12);
}

TEST(CenterStage, NoForcingGivesIdentity) {
  auto sys = coupled_pair(0.0);
  auto [out, t] = eliminate_center_order(sys, 1, 1, 1e-13);
  for (int n = t.lo; n <= t.hi; ++n) EXPECT_EQ(max_abs_diff(t.at(n), JetPoly::identity(sys.layout(), t.order)), 0.0);
}

TEST(CenterStage, DemoSecondOrderIsRemoved) {
  auto cur = straightened_demo();
  StageReport r1, r2;
  auto [s1, t1] = eliminate_center_order(cur, 1, 3, 1e-12, &r1);
  auto [s2, t2] = eliminate_center_order(s1, 2, 3, 1e-12, &r2);
  EXPECT_LE(r1.eliminated, 1e-9);
  EXPECT_LE(r2.eliminated, 1e-9);
  // order 1 stays removed after the order-2 transform
  const int band = std::max(r1.band, r2.band);
  EXPECT_LE(detail::order_size(s2, true, 1, s2.lo() + band, s2.hi() - band), 1e-10);
}

TEST(CenterStage, SkippingAnOrderIsRejected) {
  auto cur = straightened_demo();
  try {
    eliminate_center_order(cur, 2, 3, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inconsistency);
  }
}

TEST(HyperbolicStage, NoForcingGivesIdentity) {
  VarLayout l = VarLayout::split(1, 1, 1);
  auto [out, t] = eliminate_hyperbolic_order(diag3(JetPoly(l, l, 3)), 2, 1, 1e-13);
  EXPECT_EQ(max_abs_diff(t.at(0), JetPoly::identity(l, t.order)), 0.0);
}

TEST(HyperbolicStage, SingleTermIsRemoved) {
  VarLayout l = VarLayout::split(1, 1, 1);
  JetPoly f(l, l, 3);
  f.add_term(Monomial::from({0, 0, 2}), 0, 0.7);
  f.add_term(Monomial::from({1, 0, 1}), 2, -0.4);
  StageReport r;
  auto [out, t] = eliminate_hyperbolic_order(diag3(f), 2, 1, 1e-13, &r);
  EXPECT_LE(r.eliminated, 1e-10);
  EXPECT_NEAR(coeff(t.at(0), {0, 0, 2}, 0), -0.7 / 3.5, 1e-12);
}

TEST(Takens, LinearSystemHasIdentityTransform) {
  VarLayout l = VarLayout::split(1, 1, 1);
  auto r = takens_normal_form(diag3(JetPoly(l, l, 3), 0.3, 2.5), 2, 2, 1e-13);
  for (int n = r.psi.lo; n <= r.psi.hi; ++n) EXPECT_LE(max_abs_diff(r.psi.at(n), JetPoly::identity(l, r.psi.order)), 1e-15);
  EXPECT_NEAR(coeff(r.form.w.at(0), {0, 1, 0}), 1.0, 1e-15);
  EXPECT_EQ(r.form.structure_defect, 0.0);
  EXPECT_TRUE(r.conjugacy.exact);
}

TEST(Takens, ResonantRatesAreRefused) {
  VarLayout l = VarLayout::split(1, 1, 1);
  try {
    takens_normal_form(diag3(JetPoly(l, l, 3)), 2, 2, 1e-13);  // 0.5 * 2 = 1
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::resonance);
    EXPECT_NE(std::string(e.what()).find("(1,1)"), std::string::npos);
  }
}

TEST(Takens, ClosedFormIsExact) {
  auto r = takens_normal_form(coupled_pair(0.3), 1, 1, 1e-13);
  EXPECT_TRUE(r.conjugacy.exact);
  for (double v : r.conjugacy.residuals) EXPECT_LE(v, 1e-12);
  EXPECT_NEAR(coeff(r.form.a_su.at(0), {1, 0}), 0.5, 1e-14);
}

TEST(Takens, NeedsJetOrderAtLeastN0) {
  try {
    takens_normal_form(coupled_pair(0.3), 2, 1, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(Takens, DemoConjugacyConvergesAtOrderFour) {
  const auto& r = demo_result();
  EXPECT_GE(r.conjugacy.slope, 3.8);
  EXPECT_FALSE(r.conjugacy.exact);
  for (std::size_t i = 1; i < r.conjugacy.residuals.size(); ++i) EXPECT_GT(r.conjugacy.residuals[i], r.conjugacy.residuals[i - 1]);
}

TEST(Takens, DemoStructure) {
  const auto& r = demo_result();
  EXPECT_LE(r.form.structure_defect, 1e-9);
  EXPECT_LE(r.form.trusted_lo, -2);
  EXPECT_GE(r.form.trusted_hi, 2);
  for (const auto& s : r.stages)
    if (s.stage != "straighten") EXPECT_LE(s.eliminated, 1e-9) << s.stage;
}

TEST(Takens, DemoTransformIsInvertible) { EXPECT_LE(demo_result().psi.inverse_defect(), 1e-9); }

TEST(Takens, NormalFormMapMatchesJets) {
  const auto& r = demo_result();
  const VarLayout& l = r.reduced.layout();
  Vector x(3);
  x << 0.01, -0.02, 0.015;
  Vector y = r.form.apply(0, x);
  // center row sees only x_c
  Vector xc(1);
  xc << x(l.center_vars()[0]);
  EXPECT_NEAR(y(l.center_vars()[0]), r.form.w.at(0).evaluate(x)(0), 1e-15);
  Vector xc_only = Vector::Zero(3);
  xc_only(l.center_vars()[0]) = x(l.center_vars()[0]);
  EXPECT_NEAR(r.form.w.at(0).evaluate(x)(0), r.form.w.at(0).evaluate(xc_only)(0), 1e-15);
}

TEST(LogLog, SlopeOfPowerLaw) {
  std::vector<double> x{1e-3, 1e-2, 1e-1}, y;
  for (double v : x) y.push_back(3 * std::pow(v, 4));
  EXPECT_NEAR(loglog_slope(x, y), 4.0, 1e-12);
}

TEST(TaylorSplit, SplitsByUnstableDegree) {
  VarLayout l = VarLayout::split(1, 0, 1);
  JetPoly r(l, l, 4);
  r.add_term(Monomial::from({2, 1}), 0, 1.0);
  r.add_term(Monomial::from({0, 3}), 0, 1.0);
  auto [r1, r2] = taylor_split(r, 4);
  ASSERT_EQ(r1.terms().size(), 1u);
  ASSERT_EQ(r2.terms().size(), 1u);
  EXPECT_EQ(coeff(r1, {2, 1}), 1.0);
  EXPECT_EQ(coeff(r2, {0, 3}), 1.0);
  auto [a, b] = taylor_split(r, 6);
  EXPECT_EQ(a.terms().size(), 2u);
  EXPECT_TRUE(b.terms().empty());
}

TEST(Homotopy, ScalarQuadratic) {
  VarLayout l = VarLayout::split(1, 0, 0);
  JetPoly g0 = JetPoly::linear(l, l, Matrix::Constant(1, 1, 0.5), 2);
  JetPoly r1(l, l, 2);
  r1.add_term(Monomial::from({2}), 0, 1.0);
  for (double x : {-0.05, -0.02, 0.02, 0.05}) {
    Vector v(1);
    v << x;
    auto res = homotopy_series_conjugacy(g0, r1, v, 0.0, 1e-16, true);
    EXPECT_NEAR(res.h(0) / (x * x), -4.0, 1e-12);
    EXPECT_LE(res.residual, 1e-15);
    EXPECT_LE(res.flow_defect, 1e-10);
  }
}

TEST(Homotopy, ExpandingMapDiverges) {
  VarLayout l = VarLayout::split(0, 0, 1);
  JetPoly g0 = JetPoly::linear(l, l, Matrix::Constant(1, 1, 2.0), 2);
  JetPoly r1(l, l, 2);
  r1.add_term(Monomial::from({2}), 0, 1.0);
  Vector v(1);
  v << 0.1;
  try {
    homotopy_series_conjugacy(g0, r1, v, 0.0, 1e-14);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
  }
}
