#pragma once

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ntnf/app.hpp"

namespace ntnf::testing {

inline CocycleSpec constant_cocycle(const Matrix& m, int w) {
  return CocycleSpec(m.rows(), [m](int) { return m; }, {}, w);
}

inline CocycleSpec diagonal_cocycle(const std::vector<double>& d, int w) {
  Matrix m = Matrix::Zero(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return constant_cocycle(m, w);
}

// Seeded 4x4 matrices S D S^{-1}; moduli log-uniform in [0.1, 10], consecutive ratio at least 1.25.
struct TestMatrix {
  Matrix a;
  std::vector<double> moduli;  // increasing
};

inline std::vector<TestMatrix> seeded_matrices(int count = 10, unsigned seed = 2024) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), logm(std::log(0.1), std::log(10.0));
  std::vector<TestMatrix> out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<double> mod(4);
    for (auto& m : mod) m = std::exp(logm(rng));
    std::sort(mod.begin(), mod.end());
    bool ok = true;
    for (int i = 1; i < 4; ++i) ok = ok && mod[i] / mod[i - 1] >= 1.25;
    if (!ok) continue;
    Matrix d = Matrix::Zero(4, 4), s = Matrix::Identity(4, 4);
    for (int i = 0; i < 4; ++i) d(i, i) = (u(rng) < 0 ? -1.0 : 1.0) * mod[i];
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) s(i, k) += 0.3 * u(rng);
    out.push_back({s * d * s.inverse(), mod});
  }
  return out;
}

inline double log_dist(double a, double b) { return std::abs(std::log(a) - std::log(b)); }

// --- naive non-resonance enumeration ------------------------------------------------------------

using Witness = std::tuple<std::string, std::vector<int>, int>;

inline void all_indices(int r, int N, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == r) {
    int s = 0;
    for (int v : cur) s += v;
    if (s >= 1 && s <= N) out.push_back(cur);
    return;
  }
  for (int k = 0; k <= N; ++k) {
    cur.push_back(k);
    all_indices(r, N, cur, out);
    cur.pop_back();
  }
}

// Plain arithmetic (no logs, no shared enumeration); intervals widened by varsigma first.
inline std::set<Witness> naive_violations(std::vector<Interval> hyp, Interval center, int N, double varsigma) {
  for (auto& h : hyp) h = {h.lo - varsigma, h.hi + varsigma};
  std::sort(hyp.begin(), hyp.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  center = {center.lo - varsigma, center.hi + varsigma};
  const int r = static_cast<int>(hyp.size());
  std::vector<std::vector<int>> qs;
  std::vector<int> cur;
  all_indices(r, N, cur, qs);
  std::set<Witness> out;
  for (const auto& q : qs) {
    double lo = std::pow(center.lo, N), hi = std::pow(center.hi, N);
    int deg = 0;
    for (int i = 0; i < r; ++i) {
      lo *= std::pow(hyp[i].lo, q[i]);
      hi *= std::pow(hyp[i].hi, q[i]);
      deg += q[i];
    }
    auto hits = [&](const Interval& t) { return lo <= t.hi && t.lo <= hi; };
    if (hits(center)) out.insert({"NR-1", q, -1});
    if (deg >= 2)
      for (int j = 0; j < r; ++j)
        if (hits(hyp[j])) out.insert({"NR-2", q, j});
  }
  return out;
}

inline std::set<Witness> checker_violations(const NonResonanceReport& rep) {
  std::set<Witness> out;
  for (const auto& v : rep.violations) out.insert({v.condition, std::vector<int>(v.q.begin(), v.q.end()), v.target});
  return out;
}

inline SpectrumResult make_spectrum(std::vector<Interval> hyp, Interval center) {
  SpectrumResult s;
  std::sort(hyp.begin(), hyp.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  s.hyperbolic = hyp;
  s.hyperbolic_dims.assign(hyp.size(), 1);
  s.center = center;
  s.has_center = true;
  s.center_dim = 1;
  for (const auto& h : hyp)
    if (h.hi < center.lo) ++s.ell;
  s.dim = 1 + static_cast<int>(hyp.size());
  return s;
}

// Random separated spectra: r in 1..3 hyperbolic intervals away from the center.
inline std::vector<std::pair<SpectrumResult, int>> random_spectra(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<SpectrumResult, int>> out;
  while (static_cast<int>(out.size()) < count) {
    int r = 1 + static_cast<int>(u(rng) * 3) % 3;
    int N = 2 + static_cast<int>(u(rng) * 4) % 4;
    double cw = 0.1 * u(rng);
    Interval c{std::exp(-cw), std::exp(cw)};
    std::vector<Interval> hyp;
    for (int i = 0; i < r; ++i) {
      double side = u(rng) < 0.5 ? -1.0 : 1.0;
      double mid = side * (0.3 + 2.0 * u(rng)), w = 0.2 * u(rng);
      hyp.push_back({std::exp(mid - w), std::exp(mid + w)});
    }
    std::sort(hyp.begin(), hyp.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    bool ok = true;
    std::vector<Interval> all = hyp;
    all.push_back(c);
    std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 1; i < all.size(); ++i) ok = ok && all[i].lo > all[i - 1].hi * 1.05;
    if (!ok) continue;
    out.push_back({make_spectrum(hyp, c), N});
  }
  return out;
}

// --- nonlinear test systems ----------------------------------------------------------------------

// F_n(x_c, x_h) = (x_c, a x_h + b_n x_c^2), hyperbolic variable stable (a < 1) or unstable (a > 1).
inline NonlinearSystem parabola_system(double a, int W, double wobble = 0.0) {
  VarLayout l = VarLayout::split(a < 1 ? 1 : 0, 1, a > 1 ? 1 : 0);
  const int hv = l.hyperbolic_vars()[0], c = l.center_vars()[0];
  Matrix A = Matrix::Identity(2, 2);
  A(hv, hv) = a;
  auto f = sequence_from(-W, W, [&](int n) {
    JetPoly p(l, l, 2);
    p.add_term(Monomial::unit(c) + Monomial::unit(c), hv, 1.0 + wobble * std::cos(n));
    return p;
  });
  return NonlinearSystem(constant_cocycle(A, W), f);
}

inline TrichotomyData parabola_trichotomy(double a, int lo, int hi) {
  TrichotomyRates r;
  if (a < 1) {
    r.mu_minus = r.mu_plus = a;
    r.rho_minus = r.rho_plus = 4.0;
  } else {
    r.mu_minus = r.mu_plus = 0.25;
    r.rho_minus = r.rho_plus = a;
  }
  return coordinate_trichotomy(a < 1, 1, a > 1, lo, hi, r, 1.0);
}

// Coefficient of a monomial given by its exponent vector.
inline double coeff(const JetPoly& p, std::initializer_list<int> e, int comp = 0) {
  std::vector<int> v(e);
  return p.coeff(Monomial::from(std::span<const int>(v)))(comp);
}

}  // namespace ntnf::testing
