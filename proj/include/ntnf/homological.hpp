#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ntnf/resonance.hpp"
#include "ntnf/solver.hpp"
#include "ntnf/system.hpp"

namespace ntnf {

// --- split-form helpers ------------------------------------------------------------------------

inline Matrix row_selector(int d, const std::vector<int>& idx) {
  Matrix s = Matrix::Zero(idx.size(), d);
  for (std::size_t i = 0; i < idx.size(); ++i) s(i, idx[i]) = 1.0;
  return s;
}

inline JetPoly select_rows(const JetPoly& p, const std::vector<int>& idx, const VarLayout& target) {
  return p.mapped(row_selector(p.target_dim(), idx), target);
}

// Places a jet with target `rows` into the given rows of a bigger target.
inline JetPoly lift_rows(const JetPoly& p, const std::vector<int>& idx, const VarLayout& full) {
  return p.mapped(row_selector(full.dim(), idx).transpose(), full);
}

inline JetPoly center_rows(const JetPoly& f) { return select_rows(f, f.target().center_vars(), f.target().center_part()); }
inline JetPoly hyperbolic_rows(const JetPoly& f) {
  return select_rows(f, f.target().hyperbolic_vars(), f.target().hyperbolic_part());
}

inline JetPoly v_part(const JetPoly& p, int vdeg) {
  const VarLayout& l = p.vars();
  return p.filtered([&](const Monomial& m) { return v_degree(m, l) == vdeg; });
}

// Per-time pieces of F_n = (w_n(x_c) + f_n, A_n^{su}(x_c) v + g_n).
struct SplitMap {
  JetPoly w;                // center rows, v-degree 0
  JetPoly a_su;             // hyperbolic rows, v-degree 1
  JetPoly inner;            // (w, A^{su}(x_c) v) as a map of all variables
  std::vector<JetPoly> dw;  // d w / d x_c, one jet per center variable
  std::vector<JetPoly> da;  // d (A^{su} v) / d v, one jet per hyperbolic variable
};

inline SplitMap split_map(const JetPoly& f) {
  const VarLayout& l = f.vars();
  SplitMap s;
  s.w = v_part(center_rows(f), 0);
  s.a_su = v_part(hyperbolic_rows(f), 1);
  s.inner = lift_rows(s.w, l.center_vars(), l) + lift_rows(s.a_su, l.hyperbolic_vars(), l);
  for (int k : l.center_vars()) s.dw.push_back(jet_derivative(s.w, k));
  for (int k : l.hyperbolic_vars()) s.da.push_back(jet_derivative(s.a_su, k));
  return s;
}

// sum_k D_k * u_k  (a matrix-valued jet applied to a vector jet)
inline JetPoly apply_columns(const std::vector<JetPoly>& cols, const JetPoly& u, const Truncation& t) {
  if (cols.empty()) fail(ErrorKind::invalid_argument, "no columns to apply");
  JetPoly out(u.vars(), cols[0].target(), t.total);
  for (std::size_t k = 0; k < cols.size(); ++k) out += jet_scale(cols[k], u.component(static_cast<int>(k)), t);
  return out;
}

namespace detail {

inline void require_split_system(const NonlinearSystem& s, const char* what) {
  const VarLayout& l = s.layout();
  for (const auto& b : l.blocks())
    if (b.role == Role::plain) fail(ErrorKind::invalid_argument, std::string(what) + ": variables need stable/center/unstable roles");
  if (!is_center_triangular(s.linear(), l, s.lo(), s.hi()))
    fail(ErrorKind::invalid_argument, std::string(what) + ": the linear part may couple blocks only in the center rows");
}

inline std::vector<Interval> rates_of(const std::vector<Interval>& all, const std::vector<int>& blocks) {
  std::vector<Interval> out;
  for (int b : blocks) out.push_back(all.at(b));
  return out;
}

inline Matrix block_inverse_at(const NonlinearSystem& s, int n, const std::vector<int>& blocks) {
  return block_of_matrix(s.linear().inv_at(n), s.layout(), blocks);
}

inline GradedProblem base_problem(const NonlinearSystem& s, const VarLayout& target, const std::vector<int>& target_blocks,
                                  int p, double tol, const char* what) {
  const VarLayout& l = s.layout();
  GradedProblem pr;
  pr.vars = l;
  pr.target = target;
  pr.p = p;
  pr.var_rates = *s.block_spectra();
  pr.target_rates = rates_of(pr.var_rates, target_blocks);
  pr.K = s.K();
  pr.tol = tol;
  pr.lo = s.lo();
  pr.hi = s.hi();
  const CocycleSpec* a = &s.linear();
  pr.lambda = [a, l](int n) { return block_diagonal_part(a->at(n), l); };
  pr.lambda_inv = [a, l](int n) { return block_diagonal_part(a->inv_at(n), l); };
  pr.b = [a, l, target_blocks](int n) { return block_of_matrix(a->at(n), l, target_blocks); };
  pr.b_inv = [a, l, target_blocks](int n) { return block_of_matrix(a->inv_at(n), l, target_blocks); };
  pr.what = what;
  return pr;
}

inline std::vector<int> center_block_list(const VarLayout& l) {
  int c = l.center_block();
  return c < 0 ? std::vector<int>{} : std::vector<int>{c};
}

}  // namespace detail

// --- monomial split ----------------------------------------------------------------------------

struct MonomialSplit {
  int p = 0;
  std::vector<MultiIndex> s_plus, s_minus;
  double mu1 = 0, mu2 = 0;  // zero when the corresponding set is empty
  Interval center;
  std::vector<Interval> hyperbolic;
};

inline MonomialSplit monomial_split(const SpectrumResult& spectrum, int p) {
  if (p < 1) fail(ErrorKind::invalid_argument, "monomial degree p must be positive");
  MonomialSplit s;
  s.p = p;
  s.center = spectrum.center;
  s.hyperbolic = spectrum.hyperbolic;
  const double lnm = std::log(spectrum.center.lo), lnp = std::log(spectrum.center.hi);
  for (const auto& q : enumerate_multi_indices(spectrum.r(), p, p)) {
    double la = 0, lb = 0;
    for (int i = 0; i < spectrum.r(); ++i) {
      la += q[i] * std::log(spectrum.hyperbolic[i].lo);
      lb += q[i] * std::log(spectrum.hyperbolic[i].hi);
    }
    if (la > lnp) {
      s.s_plus.push_back(q);
      s.mu1 = std::max(s.mu1, std::exp(lnp - la));
    } else if (lb < lnm) {
      s.s_minus.push_back(q);
      s.mu2 = std::max(s.mu2, std::exp(lb - lnm));
    } else {
      std::string w = "(";
      for (std::size_t i = 0; i < q.size(); ++i) w += (i ? "," : "") + std::to_string(q[i]);
      w += ")";
      fail(ErrorKind::resonance, "multi-index " + w + " lies in neither S+ nor S-", w);
    }
  }
  return s;
}

// --- kappa ---------------------------------------------------------------------------------------

struct KappaInfo {
  GradedDiagnostics diag;
  double bound = 0;     // K max|rhs| / (1 - rate), dominates every coefficient
  double observed = 0;  // largest coefficient found
};

// L_n(0) kappa_n - kappa_{n+1} = rhs_n, rhs homogeneous of v-degree p with no x_c dependence.
inline TimeJetSeq solve_kappa(const NonlinearSystem& system, const MonomialSplit& split, const TimeJetSeq& rhs, double tol,
                              KappaInfo* info = nullptr) {
  detail::require_split_system(system, "solve_kappa");
  const VarLayout& l = system.layout();
  if (l.center_block() < 0) fail(ErrorKind::invalid_argument, "solve_kappa needs a center direction");
  if (!system.block_spectra()) fail(ErrorKind::invalid_argument, "solve_kappa needs block spectra on the system");
  const VarLayout cl = l.center_part();
  double rmax = 0;
  for (int n = system.lo(); n < system.hi(); ++n) {
    const JetPoly& r = rhs.at(n);
    if (!(r.vars() == l) || r.target_dim() != cl.dim()) fail(ErrorKind::invalid_argument, "rhs jets must map all variables to the center");
    for (const auto& [m, c] : r.terms())
      if (v_degree(m, l) != split.p || c_degree(m, l) != 0)
        fail(ErrorKind::invalid_argument, "rhs must be homogeneous of degree p in v and constant in x_c");
    rmax = std::max(rmax, r.max_abs());
  }
  GradedProblem pr = detail::base_problem(system, cl, detail::center_block_list(l), split.p, tol, "solve_kappa");
  pr.j_lo = pr.j_hi = 0;
  const int order = split.p;
  const CocycleSpec* a = &system.linear();
  const VarLayout cl2 = cl;
  const std::vector<int> cb = detail::center_block_list(l);
  pr.residual = [&rhs, a, l, cl2, cb, order](int n, const JetPoly& un, const JetPoly& un1) {
    // ori form: kappa_{n+1}(Lambda x) - A^c kappa_n(x) + rhs_n(Lambda x)
    JetPoly lam = JetPoly::linear(l, l, block_diagonal_part(a->at(n), l), order);
    JetPoly r = jet_compose(rhs.at(n), lam, Truncation::order(order));
    r += jet_compose(un1, lam, Truncation::order(order));
    r -= un.mapped(block_of_matrix(a->at(n), l, cb), cl2);
    return r;
  };
  TimeJetSeq kappa(system.lo(), system.hi(), JetPoly(l, cl, order));
  GradedDiagnostics d = solve_graded(pr, kappa);
  if (info) {
    info->diag = d;
    info->bound = d.max_rate < 1 ? system.K() * rmax / (1.0 - d.max_rate) : INFINITY;
    info->observed = 0;
    for (const auto& k : kappa.jets) info->observed = std::max(info->observed, k.max_abs());
  }
  return kappa;
}

// --- suspension ----------------------------------------------------------------------------------

struct SuspendedCocycle {
  int p = 0;
  int dc = 0, dxi = 0;
  int lo = 0, hi = -1;  // Delta_n defined for n in [lo, hi]
  VarLayout vars;
  std::vector<Monomial> mons;  // basis of the v-monomials of degree p
  std::vector<Matrix> delta, M, L;
  TimeJetSeq kappa;
  double m_bound = 0;

  int dim() const { return dc + dxi; }
  const Matrix& at(int n) const {
    if (n < lo || n > hi) fail(ErrorKind::out_of_window, "suspension index outside its window");
    return delta[n - lo];
  }
  // As a two-sided cocycle on the largest symmetric window.
  CocycleSpec cocycle() const {
    int w = std::min(-lo, hi);
    if (w < 0) fail(ErrorKind::window_too_small, "suspension window does not contain 0");
    auto data = delta;
    int off = lo;
    return CocycleSpec(dim(), [data, off](int n) { return data.at(n - off); }, {}, w, "suspension");
  }
};

inline SuspendedCocycle build_suspension(const NonlinearSystem& system, const MonomialSplit& split, const TimeJetSeq& kappa) {
  detail::require_split_system(system, "build_suspension");
  const VarLayout& l = system.layout();
  const int p = split.p;
  if (system.max_order() < p + 1) fail(ErrorKind::invalid_argument, "system jets must reach order p+1 for the suspension");
  const auto cv = l.center_vars(), hv = l.hyperbolic_vars();
  const VarLayout cl = l.center_part();
  const int dc = static_cast<int>(cv.size());
  SuspendedCocycle s;
  s.p = p;
  s.dc = dc;
  s.vars = l;
  s.mons = detail::graded_monomials(l, p, 0);
  s.dxi = static_cast<int>(s.mons.size()) * dc;
  s.lo = std::max(system.lo(), kappa.lo);
  s.hi = std::min(system.hi(), kappa.hi) - 1;
  s.kappa = kappa;
  Truncation t{p + 1, p, 1};
  for (int n = s.lo; n <= s.hi; ++n) {
    JetPoly f = system.full_map(n).truncated(Truncation{p + 2, p, 2});  // x_c^2 terms of w feed Dw at first order
    SplitMap sm = split_map(f);
    // A^{su}(x_c)^{-1} to first order in x_c
    Matrix a0 = Matrix::Zero(hv.size(), hv.size());
    std::vector<Matrix> a1(dc, Matrix::Zero(hv.size(), hv.size()));
    for (std::size_t k = 0; k < hv.size(); ++k) {
      a0.col(k) = sm.da[k].coeff(Monomial{});
      for (int i = 0; i < dc; ++i) a1[i].col(k) = sm.da[k].coeff(Monomial::unit(cv[i]));
    }
    Matrix a0i = guarded_inverse(a0);
    JetPoly z(l, l, p + 1);
    for (int i = 0; i < dc; ++i) z.add_term(Monomial::unit(cv[i]), cv[i], 1.0);
    for (std::size_t r = 0; r < hv.size(); ++r)
      for (std::size_t k = 0; k < hv.size(); ++k) {
        z.add_term(Monomial::unit(hv[k]), hv[r], a0i(r, k));
        for (int i = 0; i < dc; ++i) {
          double c = -(a0i * a1[i] * a0i)(r, k);
          if (c != 0.0) z.add_term(Monomial::unit(hv[k]) + Monomial::unit(cv[i]), hv[r], c);
        }
      }
    JetPoly fp = v_part(center_rows(f), p);
    JetPoly e = apply_columns(sm.dw, jet_compose(kappa.at(n), z, t), t) - jet_compose(fp, z, t);
    Matrix m(s.dxi, dc);
    for (std::size_t b = 0; b < s.mons.size(); ++b)
      for (int i = 0; i < dc; ++i) m.block(b * dc, i, dc, 1) = e.coeff(s.mons[b] + Monomial::unit(cv[i]));
    Matrix ac = block_of_matrix(system.linear().at(n), l, detail::center_block_list(l));
    Matrix sp = detail::pullback_matrix(l, s.mons, block_diagonal_part(system.linear().inv_at(n), l));
    Matrix lm = Eigen::kroneckerProduct(sp, ac);
    Matrix d = Matrix::Zero(s.dim(), s.dim());
    d.topLeftCorner(dc, dc) = ac;
    d.bottomLeftCorner(s.dxi, dc) = m;
    d.bottomRightCorner(s.dxi, s.dxi) = lm;
    s.m_bound = std::max(s.m_bound, norm2(m));
    s.M.push_back(m);
    s.L.push_back(lm);
    s.delta.push_back(d);
  }
  return s;
}

// --- homological equations -----------------------------------------------------------------------

struct HomologicalInfo {
  GradedDiagnostics diag;
  KappaInfo kappa;
  int band = 0;
  double residual = 0;          // worst coefficient residual on the trusted interior
  double sampled_residual = 0;  // worst value at |x_c| <= 0.1, |v| = 0.1
  double orbit_residual = 0;    // order-one suspension orbit defect
};

namespace detail {

// Residual of -Dw h_n + f^p + h_{n+1}(w, A^{su}(x_c) v), or the hyperbolic analogue.
struct HomologicalResidual {
  std::vector<SplitMap> maps;
  std::vector<JetPoly> forcing;
  Truncation t;
  int lo = 0;
  bool center = true;

  JetPoly operator()(int n, const JetPoly& un, const JetPoly& un1) const {
    const SplitMap& s = maps[n - lo];
    JetPoly r = forcing[n - lo];
    r += jet_compose(un1, s.inner, t);
    r -= apply_columns(center ? s.dw : s.da, un, t);
    return r.truncated(t);
  }
};

inline HomologicalResidual make_residual(const NonlinearSystem& system, int p, int J, bool center) {
  HomologicalResidual r;
  r.t = Truncation{p + J, p, J};
  r.lo = system.lo();
  r.center = center;
  for (int n = system.lo(); n < system.hi(); ++n) {
    JetPoly f = system.full_map(n).truncated(Truncation{p + J + 1, p, J + 1});
    r.maps.push_back(split_map(f));
    r.forcing.push_back(v_part(center ? center_rows(f) : hyperbolic_rows(f), p).truncated(r.t));
  }
  return r;
}

inline double sampled_max(const HomologicalResidual& res, const TimeJetSeq& u, int lo, int hi, int p, int J) {
  const VarLayout& l = u.jets[0].vars();
  const auto cv = l.center_vars(), hv = l.hyperbolic_vars();
  double worst = 0;
  std::vector<Vector> pts;
  for (double xc : {-0.1, 0.0, 0.05, 0.1})
    for (int dir = 0; dir < 4; ++dir) {
      Vector x = Vector::Zero(l.dim());
      for (int i : cv) x(i) = xc;
      for (std::size_t k = 0; k < hv.size(); ++k) x(hv[k]) = std::cos(0.7 * dir + 1.3 * k);
      double nv = 0;
      for (int k : hv) nv += x(k) * x(k);
      if (nv == 0) continue;
      for (int k : hv) x(k) *= 0.1 / std::sqrt(nv);
      pts.push_back(x);
    }
  for (int n = lo; n < hi; ++n) {
    JetPoly r = res(n, u.at(n), u.at(n + 1));
    r = r.filtered([&](const Monomial& m) { return v_degree(m, l) == p && c_degree(m, l) <= J; });
    for (const auto& x : pts) worst = std::max(worst, r.evaluate(x).norm());
  }
  return worst;
}

}  // namespace detail

// Invariant section of the suspension, orders 1..J in x_c (order 1 from the epsilon series).
inline TimeJetSeq suspension_center_jets(const SuspendedCocycle& delta, const NonlinearSystem& system, const MonomialSplit& split,
                                         int J, double tol, HomologicalInfo* info = nullptr) {
  if (J < 1) fail(ErrorKind::invalid_argument, "suspension jets need J >= 1");
  const VarLayout& l = system.layout();
  const int p = split.p, dc = delta.dc, dxi = delta.dxi;
  const auto cv = l.center_vars();
  if (!system.block_spectra()) fail(ErrorKind::invalid_argument, "suspension_center_jets needs block spectra on the system");
  const auto& rates = *system.block_spectra();
  const Interval nu = rates.at(l.center_block());

  // suspension gap at order J
  if (split.mu1 > 0 && !(std::pow(nu.lo, J) > split.mu1))
    fail(ErrorKind::gap, "suspension gap fails at order " + std::to_string(J) + ": nu-^J <= mu1");
  if (split.mu2 > 0 && !(std::pow(nu.hi, J) * split.mu2 < 1.0))
    fail(ErrorKind::gap, "suspension gap fails at order " + std::to_string(J) + ": nu+^J >= 1/mu2");

  // row directions from the growth of x_c * v^q coefficients
  GradedProblem probe = detail::base_problem(system, l.center_part(), detail::center_block_list(l), p, tol, "suspension");
  std::vector<double> mask_f(dxi), mask_b(dxi);
  double rate = 0;
  for (std::size_t b = 0; b < delta.mons.size(); ++b) {
    Interval g = detail::class_growth(probe, 0, block_degrees(delta.mons[b] + Monomial::unit(cv[0]), l));
    bool fwd = g.hi < 1.0;
    if (!fwd && !(g.lo > 1.0)) fail(ErrorKind::resonance, "suspension coefficient family is resonant");
    double r = fwd ? g.hi : 1.0 / g.lo;
    if (r > 0.999) fail(ErrorKind::conditioning, "suspension contraction rate too close to 1");
    rate = std::max(rate, r);
    for (int k = 0; k < dc; ++k) {
      mask_f[b * dc + k] = fwd ? 1.0 : 0.0;
      mask_b[b * dc + k] = fwd ? 0.0 : 1.0;
    }
  }
  Eigen::Map<const Vector> mf(mask_f.data(), dxi), mb(mask_b.data(), dxi);

  const int lo = delta.lo, hi = delta.hi + 1;
  const int steps = hi - lo;
  std::vector<Matrix> e(steps + 1, Matrix::Zero(dxi, dc));
  double mmax = 0;
  for (const auto& m : delta.M) mmax = std::max(mmax, m.cwiseAbs().maxCoeff());
  for (int s = 0; s < steps; ++s) {
    Matrix aci = guarded_inverse(delta.delta[s].topLeftCorner(dc, dc));
    e[s + 1] = mf.asDiagonal() * ((delta.M[s] + delta.L[s] * e[s]) * aci);
  }
  Matrix z = Matrix::Zero(dxi, dc);
  for (int s = steps - 1; s >= 0; --s) {
    Matrix ac = delta.delta[s].topLeftCorner(dc, dc);
    z = mb.asDiagonal() * delta.L[s].fullPivLu().solve(z * ac - delta.M[s]);
    e[s] += z;
  }
  int band = 0;
  if (mmax > 0 && rate > 0) band = std::max(0, static_cast<int>(std::ceil(std::log(tol / (system.K() * mmax)) / std::log(rate))));
  if (2 * band + 1 > steps) fail(ErrorKind::window_too_small, "suspension: window too small for the requested tolerance");
  double orbit = 0;
  for (int s = band; s < steps - band; ++s) {
    Matrix ac = delta.delta[s].topLeftCorner(dc, dc);
    orbit = std::max(orbit, (delta.M[s] + delta.L[s] * e[s] - e[s + 1] * ac).cwiseAbs().maxCoeff());
  }

  TimeJetSeq u(lo, hi, JetPoly(l, l.center_part(), p + J));
  for (int s = 0; s <= steps; ++s) {
    JetPoly& jet = u.at(lo + s);
    jet += delta.kappa.at(lo + s).with_order(p + J);
    for (std::size_t b = 0; b < delta.mons.size(); ++b)
      for (int i = 0; i < dc; ++i) {
        Vector c = e[s].block(b * dc, i, dc, 1);
        if (c.cwiseAbs().maxCoeff() > 0) jet.add_term(delta.mons[b] + Monomial::unit(cv[i]), c);
      }
  }
  GradedDiagnostics d;
  if (J >= 2) {
    NonlinearSystem sub = system.with_window(lo, hi);
    auto res = detail::make_residual(sub, p, J, true);
    GradedProblem pr = detail::base_problem(sub, l.center_part(), detail::center_block_list(l), p, tol, "suspension");
    pr.j_lo = 2;
    pr.j_hi = J;
    pr.residual = res;
    d = solve_graded(pr, u);
  }
  d.band = std::max(d.band, band);
  if (info) {
    info->diag = d;
    info->orbit_residual = orbit;
    info->band = std::max(info->band, d.band);
  }
  // drop the order-0 part (kappa)
  for (auto& jet : u.jets) jet = jet.filtered([&](const Monomial& m) { return c_degree(m, l) >= 1; });
  return u;
}

// h_n^p with v-degree p and x_c-orders 0..J removing the v-order-p center terms.
inline TimeJetSeq solve_homological_center(const NonlinearSystem& system, int p, int J, double tol, HomologicalInfo* info = nullptr) {
  detail::require_split_system(system, "solve_homological_center");
  if (p < 1 || J < 0) fail(ErrorKind::invalid_argument, "need p >= 1 and J >= 0");
  const VarLayout& l = system.layout();
  if (l.center_block() < 0) fail(ErrorKind::invalid_argument, "solve_homological_center needs a center direction");
  if (l.hyperbolic_vars().empty()) fail(ErrorKind::invalid_argument, "solve_homological_center needs hyperbolic variables");
  if (!system.block_spectra()) fail(ErrorKind::invalid_argument, "solve_homological_center needs block spectra on the system");
  const VarLayout cl = l.center_part();
  HomologicalInfo local;
  HomologicalInfo& inf = info ? *info : local;
  inf = HomologicalInfo{};

  // spectral data of the blocks as a spectrum for the split
  SpectrumResult spec;
  spec.dim = l.dim();
  spec.center = system.block_spectra()->at(l.center_block());
  spec.has_center = true;
  for (int b : l.hyperbolic_blocks()) spec.hyperbolic.push_back(system.block_spectra()->at(b));
  MonomialSplit split = monomial_split(spec, p);

  // order 0: kappa with rhs = f^p(0, A^{su}(0)^{-1} v)
  TimeJetSeq rhs(system.lo(), system.hi(), JetPoly(l, cl, p));
  for (int n = system.lo(); n < system.hi(); ++n) {
    JetPoly fp = v_part(center_rows(system.full_map(n)), p).filtered([&](const Monomial& m) { return c_degree(m, l) == 0; });
    Matrix li = block_diagonal_part(system.linear().inv_at(n), l);
    rhs.at(n) = jet_compose(fp, JetPoly::linear(l, l, li, p), Truncation::order(p)).with_order(p);
  }
  TimeJetSeq kappa = solve_kappa(system, split, rhs, tol, &inf.kappa);
  inf.band = inf.kappa.diag.band;

  TimeJetSeq h = kappa;
  if (J >= 1) {
    SuspendedCocycle s = build_suspension(system, split, kappa);
    TimeJetSeq higher = suspension_center_jets(s, system, split, J, tol, &inf);
    h = TimeJetSeq(higher.lo, higher.hi, JetPoly(l, cl, p + J));
    for (int n = h.lo; n <= h.hi; ++n) h.at(n) = kappa.at(n).with_order(p + J) + higher.at(n);
  }
  NonlinearSystem sub = system.with_window(h.lo, h.hi);
  auto res = detail::make_residual(sub, p, J, true);
  inf.band = std::max(inf.band, inf.diag.band);
  for (int n = h.lo + inf.band; n < h.hi - inf.band; ++n) inf.residual = std::max(inf.residual, res(n, h.at(n), h.at(n + 1)).max_abs());
  inf.sampled_residual = detail::sampled_max(res, h, h.lo + inf.band, h.hi - inf.band, p, J);
  return h;
}

// h-hat_n^p: hyperbolic-valued, v-degree p, x_c-orders 0..J.
inline TimeJetSeq solve_homological_hyperbolic(const NonlinearSystem& system, int p, int J, double tol,
                                               HomologicalInfo* info = nullptr) {
  detail::require_split_system(system, "solve_homological_hyperbolic");
  if (p < 2 || J < 0) fail(ErrorKind::invalid_argument, "need p >= 2 and J >= 0");
  const VarLayout& l = system.layout();
  if (l.hyperbolic_vars().empty()) fail(ErrorKind::invalid_argument, "solve_homological_hyperbolic needs hyperbolic variables");
  if (!system.block_spectra()) fail(ErrorKind::invalid_argument, "solve_homological_hyperbolic needs block spectra on the system");
  const VarLayout hl = l.hyperbolic_part();
  HomologicalInfo local;
  HomologicalInfo& inf = info ? *info : local;
  inf = HomologicalInfo{};
  auto res = detail::make_residual(system, p, J, false);
  GradedProblem pr = detail::base_problem(system, hl, l.hyperbolic_blocks(), p, tol, "solve_homological_hyperbolic");
  pr.j_lo = 0;
  pr.j_hi = J;
  pr.residual = res;
  TimeJetSeq h(system.lo(), system.hi(), JetPoly(l, hl, p + J));
  inf.diag = solve_graded(pr, h);
  inf.band = inf.diag.band;
  inf.residual = inf.diag.residual;
  inf.sampled_residual = detail::sampled_max(res, h, h.lo + inf.band, h.hi - inf.band, p, J);
  return h;
}

}  // namespace ntnf
