#include <gtest/gtest.h>

#include "support.hpp"

using namespace ntnf;
using namespace ntnf::testing;

TEST(Dichotomy, StraddlingRateIsDichotomic) {
  auto a = diagonal_cocycle({0.5, 2}, 32);
  auto v = dichotomy_test(a, 1.0, 16, 1e-4);
  EXPECT_TRUE(v.has_dichotomy);
  EXPECT_EQ(v.rank, 1);
}

TEST(Dichotomy, RateOnEigenvalueIsNot) {
  auto a = diagonal_cocycle({0.5, 2}, 32);
  EXPECT_FALSE(dichotomy_test(a, 2.0, 16, 1e-4).has_dichotomy);
}

TEST(Dichotomy, StepAtOneIsNot) {
  auto a = builtin_family("step", json{{"left", 2}, {"right", 0.5}}, 0, 32);
  auto v = dichotomy_test(a, 1.0, 16, 1e-4);
  EXPECT_FALSE(v.has_dichotomy);
  // the smallest singular value decays with the section length
  EXPECT_LT(v.margin_2w, v.margin);
}

TEST(Spectrum, DiagonalPoints) {
  auto a = diagonal_cocycle({0.25, 1, 3}, 32);
  SpectrumResult s = compute_spectrum(a);
  auto all = s.all_intervals();
  ASSERT_EQ(all.size(), 3u);
  const double want[] = {0.25, 1, 3};
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(all[i].contains(want[i])) << i;
    EXPECT_LE(std::log(all[i].hi / all[i].lo), 0.05);
  }
  EXPECT_TRUE(s.has_center);
  EXPECT_EQ(s.ell, 1);
}

TEST(Spectrum, StepIsOneCenterInterval) {
  auto a = builtin_family("step", json{{"left", 2}, {"right", 0.5}}, 0, 32);
  SpectrumResult s = compute_spectrum(a);
  ASSERT_TRUE(s.has_center);
  EXPECT_TRUE(s.hyperbolic.empty());
  EXPECT_LE(log_dist(s.center.lo, 0.5), std::log(1.05));
  EXPECT_LE(log_dist(s.center.hi, 2.0), std::log(1.05));
}

TEST(Spectrum, ScalingCovariance) {
  auto a = diagonal_cocycle({0.25, 1, 3}, 32);
  auto s = compute_spectrum(a).all_intervals(), t = compute_spectrum(a.scaled(3)).all_intervals();
  ASSERT_EQ(s.size(), t.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LE(log_dist(3 * s[i].lo, t[i].lo), 0.05);
    EXPECT_LE(log_dist(3 * s[i].hi, t[i].hi), 0.05);
  }
}

TEST(Spectrum, IntervalsSortedAndDisjoint) {
  for (const auto& m : seeded_matrices(3, 99)) {
    auto all = compute_spectrum(constant_cocycle(m.a, 32)).all_intervals();
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GT(all[i].lo, all[i - 1].hi);
    for (const auto& iv : all) EXPECT_GT(iv.lo, 0);
  }
}

TEST(Inflation, ZeroIsIdentity) {
  SpectrumResult s = make_spectrum({{0.5, 0.5}, {2, 2}}, {1, 1});
  auto t = inflate_spectrum(s, 0);
  EXPECT_EQ(t.hyperbolic[0].lo, 0.5);
  EXPECT_EQ(t.center.hi, 1.0);
}

TEST(Inflation, Endpoints) {
  auto t = inflate_spectrum(make_spectrum({{0.5, 0.5}, {2, 2}}, {1, 1}), 0.01);
  EXPECT_NEAR(t.hyperbolic[0].lo, 0.49, 1e-15);
  EXPECT_NEAR(t.hyperbolic[1].hi, 2.01, 1e-15);
  EXPECT_NEAR(t.center.lo, 0.99, 1e-15);
  EXPECT_NEAR(t.center.hi, 1.01, 1e-15);
}

TEST(Inflation, OverlapIsAnError) {
  try {
    inflate_spectrum(make_spectrum({{0.5, 0.9}}, {1, 1}), 0.06);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::overlap);
  }
}

TEST(Splitting, DiagonalGivesCoordinateProjections) {
  auto a = diagonal_cocycle({0.5, 1, 2}, 64);
  TrichotomyData t = extract_splitting(a, compute_spectrum(a));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(t.stable(0)(i, i), i == 0 ? 1.0 : 0.0, 1e-10);
    EXPECT_NEAR(t.center(0)(i, i), i == 1 ? 1.0 : 0.0, 1e-10);
    EXPECT_NEAR(t.unstable(0)(i, i), i == 2 ? 1.0 : 0.0, 1e-10);
  }
  EXPECT_TRUE(verify_trichotomy(a, t).pass);
}
