#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "ntnf/cocycle.hpp"
#include "ntnf/interval.hpp"
#include "ntnf/jets.hpp"
#include "ntnf/spectral.hpp"

namespace ntnf {

// x_{n+1} = A_n x_n + f_n(x_n) with polynomial f_n vanishing to second order.
class NonlinearSystem {
public:
  NonlinearSystem() = default;

  NonlinearSystem(CocycleSpec linear, TimeJetSeq f) : linear_(std::move(linear)), f_(std::move(f)) {
    if (f_.size() <= 0) fail(ErrorKind::invalid_argument, "nonlinearity window is empty");
    const VarLayout& l = f_.jets[0].vars();
    if (l.dim() != linear_.dim()) fail(ErrorKind::invalid_argument, "nonlinearity variables do not match the cocycle dimension");
    if (!linear_.contains(f_.lo) || !linear_.contains(f_.hi)) fail(ErrorKind::out_of_window, "nonlinearity window exceeds the cocycle window");
    for (const auto& p : f_.jets) {
      if (!(p.vars() == l) || !(p.target() == l) || p.max_order() != f_.jets[0].max_order())
        fail(ErrorKind::invalid_argument, "nonlinearity jets must share one shape");
      for (const auto& [m, c] : p.terms())
        if (m.degree() <= 1 && c.cwiseAbs().maxCoeff() != 0.0)
          fail(ErrorKind::invalid_argument, "nonlinearity must vanish with its first derivative at the origin");
    }
    for (const auto& p : f_.jets) {
      double lip = 0, second = 0;
      for (const auto& [m, c] : p.terms()) {
        double k = m.degree(), a = c.norm();
        lip += k * a;
        second += k * (k - 1) * a;
      }
      delta_ = std::max(delta_, lip);
      deriv_bound_ = std::max(deriv_bound_, second);
    }
  }

  const CocycleSpec& linear() const { return linear_; }
  const TimeJetSeq& nonlinearity() const { return f_; }
  const VarLayout& layout() const { return f_.jets[0].vars(); }
  int lo() const { return f_.lo; }
  int hi() const { return f_.hi; }
  int max_order() const { return f_.jets[0].max_order(); }
  int dim() const { return linear_.dim(); }
  // Lipschitz and second-derivative bounds of f_n on the unit ball (coefficient sums)
  double smallness() const { return delta_; }
  double deriv_bound() const { return deriv_bound_; }

  const std::optional<std::vector<Interval>>& block_spectra() const { return spectra_; }
  void set_block_spectra(std::vector<Interval> s) {
    if (static_cast<int>(s.size()) != layout().num_blocks()) fail(ErrorKind::invalid_argument, "one spectral interval per block is required");
    spectra_ = std::move(s);
  }
  double K() const { return K_; }
  void set_K(double k) { K_ = k; }

  JetPoly full_map(int n) const {
    JetPoly p = JetPoly::linear(layout(), layout(), linear_.at(n), max_order());
    p += f_.at(n);
    return p;
  }

  Vector apply(int n, const Vector& x) const { return linear_.at(n) * x + f_.at(n).evaluate(x); }

  // Same linear part, new nonlinearity (keeps spectral annotations).
  NonlinearSystem with_nonlinearity(TimeJetSeq f) const {
    NonlinearSystem s(linear_, std::move(f));
    s.spectra_ = spectra_;
    s.K_ = K_;
    return s;
  }

  // Restriction to a subwindow of the nonlinearity.
  NonlinearSystem with_window(int lo, int hi) const {
    if (lo < f_.lo || hi > f_.hi || lo > hi) fail(ErrorKind::out_of_window, "subwindow outside the system window");
    TimeJetSeq f;
    f.lo = lo;
    f.hi = hi;
    f.jets.assign(f_.jets.begin() + (lo - f_.lo), f_.jets.begin() + (hi - f_.lo + 1));
    return with_nonlinearity(std::move(f));
  }

private:
  CocycleSpec linear_;
  TimeJetSeq f_;
  double delta_ = 0, deriv_bound_ = 0;
  std::optional<std::vector<Interval>> spectra_;
  double K_ = 1.0;
};

// Strips the constant and linear part of a full map jet A x + f(x).
inline JetPoly nonlinear_part(const JetPoly& full) {
  return full.filtered([](const Monomial& m) { return m.degree() >= 2; });
}

inline bool is_block_diagonal(const CocycleSpec& a, const VarLayout& l, int lo, int hi, double tol = 1e-13) {
  for (int n = lo; n <= hi; ++n) {
    const Matrix& m = a.at(n);
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (int i = 0; i < l.dim(); ++i)
      for (int k = 0; k < l.dim(); ++k)
        if (l.block_of(i) != l.block_of(k) && std::abs(m(i, k)) > tol * scale) return false;
  }
  return true;
}

// Only the center rows may couple to other blocks (a linear v-term of the center equation).
inline bool is_center_triangular(const CocycleSpec& a, const VarLayout& l, int lo, int hi, double tol = 1e-13) {
  for (int n = lo; n <= hi; ++n) {
    const Matrix& m = a.at(n);
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (int i = 0; i < l.dim(); ++i)
      for (int k = 0; k < l.dim(); ++k)
        if (l.block_of(i) != l.block_of(k) && !(l.is_center(i) && !l.is_center(k)) && std::abs(m(i, k)) > tol * scale) return false;
  }
  return true;
}

inline Matrix block_diagonal_part(const Matrix& m, const VarLayout& l) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (int b = 0; b < l.num_blocks(); ++b) {
    int o = l.offset(b), d = l.block(b).dim;
    out.block(o, o, d, d) = m.block(o, o, d, d);
  }
  return out;
}

inline Matrix block_of_matrix(const Matrix& m, const VarLayout& l, const std::vector<int>& blocks) {
  std::vector<int> idx;
  for (int b : blocks)
    for (int i = 0; i < l.block(b).dim; ++i) idx.push_back(l.offset(b) + i);
  Matrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t k = 0; k < idx.size(); ++k) out(i, k) = m(idx[i], idx[k]);
  return out;
}

// Hull of the dichotomy spectrum of each diagonal block; exact eigenvalue moduli for constant blocks.
inline std::vector<Interval> block_spectra(const CocycleSpec& a, const VarLayout& l, const SpectrumOptions& base = {}) {
  std::vector<Interval> out;
  for (int b = 0; b < l.num_blocks(); ++b) {
    CocycleSpec blk = a.block(l.offset(b), l.block(b).dim);
    bool constant = true;
    for (int n = -blk.window(); n < blk.window() && constant; ++n)
      constant = (blk.at(n) - blk.at(n + 1)).cwiseAbs().maxCoeff() == 0.0;
    if (constant) {
      Eigen::EigenSolver<Matrix> es(blk.at(0));
      auto mods = es.eigenvalues().cwiseAbs();
      out.push_back({mods.minCoeff(), mods.maxCoeff()});
      continue;
    }
    SpectrumOptions opt = base;
    opt.test.window = std::min(opt.test.window, blk.window() / 2);
    auto s = compute_spectrum(blk, opt);
    auto all = s.all_intervals();
    if (all.empty()) fail(ErrorKind::inconsistency, "block spectrum is empty");
    Interval h = all.front();
    for (const auto& iv : all) h = h.hull(iv);
    out.push_back(h);
  }
  return out;
}

inline void ensure_block_spectra(NonlinearSystem& s, const SpectrumOptions& opt = {}) {
  if (!s.block_spectra()) s.set_block_spectra(block_spectra(s.linear(), s.layout(), opt));
}

// Same nonlinearity for every n on [lo, hi].
inline TimeJetSeq constant_sequence(int lo, int hi, const JetPoly& p) { return TimeJetSeq(lo, hi, p); }

inline TimeJetSeq sequence_from(int lo, int hi, const std::function<JetPoly(int)>& gen) {
  TimeJetSeq s;
  s.lo = lo;
  s.hi = hi;
  for (int n = lo; n <= hi; ++n) s.jets.push_back(gen(n));
  return s;
}

struct DemoSystemOptions {
  int ds = 1, dc = 1, du = 1;
  double stable = 0.3, unstable = 2.5;
  double delta = 0.05;   // coefficient scale of the nonlinearity
  double wobble = 0.05;  // quasi-periodic modulation of the linear part
  int degree = 4;        // highest monomial degree of f_n
  int window = 160;
  unsigned seed = 7;
};

// Seed-fixed quasi-periodically forced polynomial system with diagonal linear part.
inline NonlinearSystem demo_system(const DemoSystemOptions& o) {
  const VarLayout l = VarLayout::split(o.ds, o.dc, o.du);
  const int d = l.dim();
  const double omega = 2.0 * std::numbers::pi * std::numbers::phi;
  std::vector<double> base(d), phase(d);
  for (int i = 0; i < d; ++i) {
    Role r = l.role_of(i);
    base[i] = r == Role::stable ? o.stable * std::pow(0.9, i) : r == Role::center ? 1.0 : o.unstable * std::pow(1.1, i - (d - o.du));
    phase[i] = 1.0 + 0.7 * i;
  }
  auto diag = [=](int n, double sign) {
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = std::pow(base[i] * std::exp(o.wobble * std::cos(omega * n + phase[i])), sign);
    return m;
  };
  CocycleSpec a(d, [diag](int n) { return diag(n, 1.0); }, [diag](int n) { return diag(n, -1.0); }, o.window, "demo");

  // fixed coefficients with their own modulation phases
  std::mt19937_64 eng(o.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Term {
    Monomial m;
    int comp;
    double c, amp, ph;
  };
  std::vector<Term> terms;
  const auto& basis = detail::MonomialBasis::get(d, o.degree);
  for (int k = 0; k < basis.size(); ++k) {
    if (basis.degree(k) < 2) continue;
    for (int comp = 0; comp < d; ++comp) terms.push_back({basis.at(k), comp, o.delta * u(eng), 0.3 * u(eng), 3.0 * u(eng)});
  }
  const double omega2 = 2.0 * std::numbers::pi * (std::numbers::sqrt2 - 1.0);
  auto f = sequence_from(-o.window, o.window, [&](int n) {
    JetPoly p(l, l, o.degree);
    for (const auto& t : terms) p.add_term(t.m, t.comp, t.c * (1.0 + t.amp * std::cos(omega2 * n + t.ph)));
    return p;
  });
  return NonlinearSystem(a, f);
}

}  // namespace ntnf
