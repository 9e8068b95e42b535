#include <gtest/gtest.h>

#include "support.hpp"

using namespace ntnf;
using namespace ntnf::testing;

TEST(Jets, ZeroEvaluatesToZero) {
  JetPoly p(VarLayout::split(1, 1, 1), 2, 3);
  Vector x(3);
  x << 0.3, -2, 5;
  EXPECT_EQ(p.evaluate(x).norm(), 0.0);
}

TEST(Jets, Evaluate) {
  VarLayout c = VarLayout::split(0, 1, 0);
  JetPoly p(c, 1, 2);
  p.add_term(Monomial::from({2}), 0, 2.0);
  Vector x(1);
  x << 3;
  EXPECT_DOUBLE_EQ(p.evaluate(x)(0), 18.0);
  VarLayout su = VarLayout::split(1, 0, 1);
  JetPoly q(su, 1, 2);
  q.add_term(Monomial::from({1, 1}), 0, 1.0);
  Vector y(2);
  y << 2, 5;
  EXPECT_DOUBLE_EQ(q.evaluate(y)(0), 10.0);
}

TEST(Jets, ComposeSquare) {
  VarLayout l = VarLayout::plain(1);
  JetPoly u2(l, 1, 4), in(l, 1, 4);
  u2.add_term(Monomial::from({2}), 0, 1.0);
  in.add_term(Monomial::from({1}), 0, 1.0);
  in.add_term(Monomial::from({2}), 0, 1.0);
  JetPoly c = jet_compose(u2, std::vector<JetPoly>{in}, Truncation::order(3));
  EXPECT_DOUBLE_EQ(coeff(c, {2}), 1.0);
  EXPECT_DOUBLE_EQ(coeff(c, {3}), 2.0);
  EXPECT_EQ(c.terms().size(), 2u);
}

TEST(Jets, IdentityOuterReturnsInner) {
  VarLayout l = VarLayout::split(1, 1, 1);
  JetPoly in = JetPoly::identity(l, 3);
  in.add_term(Monomial::from({1, 1, 0}), 2, 0.7);
  in.add_term(Monomial::from({0, 3, 0}), 0, -0.2);
  EXPECT_EQ(max_abs_diff(jet_compose(JetPoly::identity(l, 3), in, 3), in), 0.0);
}

TEST(Jets, NearIdentityInverseMatchesFixedPointOracle) {
  VarLayout l = VarLayout::split(1, 1, 1);
  JetPoly h(l, l, 3);
  h.add_term(Monomial::from({1, 1, 0}), 2, 0.7);
  h.add_term(Monomial::from({0, 2, 0}), 0, -0.3);
  h.add_term(Monomial::from({1, 1, 1}), 1, 0.4);
  JetPoly id = JetPoly::identity(l, 3);
  JetPoly map = id + h;
  // oracle: g <- Id - h o g, three sweeps
  JetPoly g = id;
  for (int k = 0; k < 3; ++k) g = id - jet_compose(h, g, 3);
  JetPoly inv = near_identity_inverse(map, Truncation::order(3));
  EXPECT_LE(max_abs_diff(inv, g), 1e-15);
  EXPECT_LE(max_abs_diff(jet_compose(map, inv, 3), id), 1e-15);
}

TEST(Jets, ProjectionsAreComplementary) {
  VarLayout l = VarLayout::split(1, 1, 1);
  JetPoly p(l, l, 2);
  p.add_term(Monomial::from({1, 1, 0}), Vector::Constant(3, 1.5));
  p.add_term(Monomial::from({0, 0, 2}), Vector::Constant(3, -0.5));
  EXPECT_EQ(jet_project(jet_project(p, Group::c), Group::s).max_abs(), 0.0);
  EXPECT_EQ(max_abs_diff(jet_project(p, Group::su) + jet_project(p, Group::c), p), 0.0);
}

TEST(Jets, BlockProjection) {
  VarLayout l({{Role::stable, 1}, {Role::stable, 1}, {Role::unstable, 1}});
  JetPoly p(l, l, 2);
  p.add_term(Monomial::from({1, 1, 0}), Vector::Constant(3, 2.0));
  JetPoly b = jet_project(p, Group::block, 1);
  Vector c = b.coeff(Monomial::from({1, 1, 0}));
  EXPECT_EQ(c(0), 0.0);
  EXPECT_EQ(c(1), 2.0);
  EXPECT_EQ(c(2), 0.0);
}

TEST(Jets, DerivativeAndJacobian) {
  VarLayout l = VarLayout::plain(2);
  JetPoly p(l, 1, 3);
  p.add_term(Monomial::from({2, 1}), 0, 3.0);  // 3 x^2 y
  Vector x(2);
  x << 0.5, -2;
  Matrix j = jet_jacobian(p, x);
  EXPECT_DOUBLE_EQ(j(0, 0), 6 * 0.5 * -2);
  EXPECT_DOUBLE_EQ(j(0, 1), 3 * 0.25);
}

TEST(Jets, JsonRoundTrip) {
  VarLayout l = VarLayout::split(1, 1, 1);
  JetPoly p(l, l, 3);
  p.add_term(Monomial::from({1, 2, 0}), Vector::Constant(3, 0.25));
  p.add_term(Monomial::from({0, 1, 1}), Vector::Constant(3, -1.0));
  EXPECT_EQ(max_abs_diff(jet_from_json(jet_to_json(p)), p), 0.0);
}

TEST(Jets, TruncationByGroup) {
  VarLayout l = VarLayout::split(1, 1, 0);
  JetPoly p(l, 1, 4);
  p.add_term(Monomial::from({2, 1}), 0, 1.0);
  p.add_term(Monomial::from({1, 3}), 0, 1.0);
  JetPoly t = p.truncated(Truncation{4, 1, 4});
  EXPECT_EQ(t.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(coeff(t, {1, 3}), 1.0);
}
