#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ntnf/homological.hpp"
#include "ntnf/manifold.hpp"

namespace ntnf {

// Near-identity coordinate changes T_n with truncated inverses, n in [lo, hi].
struct TransformSeq {
  int lo = 0, hi = -1;
  int order = 0;
  std::string tag;  // straighten | center-p | hyperbolic-p | composed
  std::vector<JetPoly> map, inverse;

  const JetPoly& at(int n) const {
    if (n < lo || n > hi) fail(ErrorKind::out_of_window, "transform index outside its window");
    return map[n - lo];
  }
  const JetPoly& inv_at(int n) const {
    if (n < lo || n > hi) fail(ErrorKind::out_of_window, "transform index outside its window");
    return inverse[n - lo];
  }
  // largest deviation of T o T^{-1} from the identity
  double inverse_defect() const {
    double worst = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      JetPoly id = JetPoly::identity(map[i].vars(), order);
      worst = std::max(worst, max_abs_diff(jet_compose(map[i], inverse[i], order), id));
    }
    return worst;
  }
};

// System with the full maps G_n (linear parts taken from the jets, the old cocycle outside [lo, hi]).
inline NonlinearSystem system_from_maps(const NonlinearSystem& base, int lo, int hi, const std::vector<JetPoly>& maps) {
  std::vector<Matrix> lin;
  for (const auto& g : maps) lin.push_back(linear_part(g));
  auto gen = base.linear().generator();
  CocycleSpec a(
      base.dim(), [lin, lo, hi, gen](int n) { return n >= lo && n <= hi ? lin[n - lo] : gen(n); }, {}, base.linear().window(),
      base.linear().name());
  TimeJetSeq f;
  f.lo = lo;
  f.hi = hi;
  for (const auto& g : maps) f.jets.push_back(nonlinear_part(g));
  NonlinearSystem s(a, std::move(f));
  if (base.block_spectra()) s.set_block_spectra(*base.block_spectra());
  s.set_K(base.K());
  return s;
}

// G_n = T_{n+1} o F_n o T_n^{-1} on [lo, hi - 1].
inline NonlinearSystem conjugate(const NonlinearSystem& system, const TransformSeq& t) {
  const int lo = std::max(system.lo(), t.lo), hi = std::min(system.hi(), t.hi) - 1;
  if (hi < lo) fail(ErrorKind::window_too_small, "conjugation leaves an empty window");
  const int order = std::max(system.max_order(), t.order);
  std::vector<JetPoly> maps;
  for (int n = lo; n <= hi; ++n) {
    JetPoly g = jet_compose(system.full_map(n), t.inv_at(n), order);
    maps.push_back(jet_compose(t.at(n + 1), g, order).prune(0.0));
  }
  return system_from_maps(system, lo, hi, maps);
}

inline TransformSeq transform_from_shift(const TimeJetSeq& shift, const std::vector<int>& rows, const VarLayout& l, int order,
                                         std::string tag) {
  TransformSeq t;
  t.lo = shift.lo;
  t.hi = shift.hi;
  t.order = order;
  t.tag = std::move(tag);
  for (const auto& h : shift.jets) {
    JetPoly m = JetPoly::identity(l, order);
    m += lift_rows(h, rows, l).with_order(order);
    t.inverse.push_back(near_identity_inverse(m, Truncation::order(order)));
    t.map.push_back(std::move(m));
  }
  return t;
}

// (x_c, v) -> (x_c, v - phi_n(x_c)).
inline TransformSeq straightening_transform(const CenterManifoldJets& cm, const VarLayout& l, int order) {
  TimeJetSeq shift(cm.phi.lo, cm.phi.hi, JetPoly(l, l.hyperbolic_part(), order));
  for (int n = cm.phi.lo; n <= cm.phi.hi; ++n) shift.at(n) = -1.0 * detail::lift_to_full(cm.phi.at(n), l, order);
  return transform_from_shift(shift, l.hyperbolic_vars(), l, order, "straighten");
}

struct StageReport {
  std::string stage;
  int p = 0;
  int band = 0;
  double max_rate = 0;
  double residual = 0;  // homological residual on the trusted interior
  double eliminated = 0;  // largest surviving coefficient of the targeted order after the transform
};

namespace detail {

// Largest coefficient among the given rows with v-degree p, over n in [lo, hi].
inline double order_size(const NonlinearSystem& s, bool center, int p, int lo, int hi) {
  double worst = 0;
  const VarLayout& l = s.layout();
  for (int n = std::max(lo, s.lo()); n <= std::min(hi, s.hi()); ++n) {
    JetPoly rows = center ? center_rows(s.full_map(n)) : hyperbolic_rows(s.full_map(n));
    for (const auto& [m, c] : rows.terms())
      if (v_degree(m, l) == p) worst = std::max(worst, c.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace detail

inline std::pair<NonlinearSystem, TransformSeq> eliminate_center_order(const NonlinearSystem& system, int p, int J, double tol,
                                                                        StageReport* report = nullptr) {
  const VarLayout& l = system.layout();
  const int order = system.max_order();
  const int jp = std::max(0, std::min(J, order - p));
  HomologicalInfo info;
  TimeJetSeq h = solve_homological_center(system, p, jp, tol, &info);
  const int lo = h.lo + info.band, hi = h.hi - info.band;
  for (int q = 1; q < p; ++q)
    if (detail::order_size(system, true, q, lo, hi) > 1e-8)
      fail(ErrorKind::inconsistency, "center rows still carry v-order " + std::to_string(q) + " before eliminating order " + std::to_string(p));
  TransformSeq t = transform_from_shift(h, l.center_vars(), l, order, "center-" + std::to_string(p));
  NonlinearSystem out = conjugate(system, t);
  if (report) {
    report->stage = t.tag;
    report->p = p;
    report->band = info.band;
    report->max_rate = info.diag.max_rate;
    report->residual = info.residual;
    report->eliminated = detail::order_size(out, true, p, lo, hi - 1);
  }
  return {std::move(out), std::move(t)};
}

inline std::pair<NonlinearSystem, TransformSeq> eliminate_hyperbolic_order(const NonlinearSystem& system, int p, int J, double tol,
                                                                            StageReport* report = nullptr) {
  const VarLayout& l = system.layout();
  const int order = system.max_order();
  const int jp = std::max(0, std::min(J, order - p));
  HomologicalInfo info;
  TimeJetSeq h = solve_homological_hyperbolic(system, p, jp, tol, &info);
  const int lo = h.lo + info.band, hi = h.hi - info.band;
  for (int q = 2; q < p; ++q)
    if (detail::order_size(system, false, q, lo, hi) > 1e-8)
      fail(ErrorKind::inconsistency, "hyperbolic rows still carry v-order " + std::to_string(q) + " before eliminating order " + std::to_string(p));
  TransformSeq t = transform_from_shift(h, l.hyperbolic_vars(), l, order, "hyperbolic-" + std::to_string(p));
  NonlinearSystem out = conjugate(system, t);
  if (report) {
    report->stage = t.tag;
    report->p = p;
    report->band = info.band;
    report->max_rate = info.diag.max_rate;
    report->residual = info.residual;
    report->eliminated = detail::order_size(out, false, p, lo, hi - 1);
  }
  return {std::move(out), std::move(t)};
}

// T_k o ... o T_1, truncated.
inline TransformSeq compose_transforms(const std::vector<TransformSeq>& ts, int order) {
  if (ts.empty()) fail(ErrorKind::invalid_argument, "nothing to compose");
  TransformSeq out;
  out.lo = ts[0].lo;
  out.hi = ts[0].hi;
  for (const auto& t : ts) {
    out.lo = std::max(out.lo, t.lo);
    out.hi = std::min(out.hi, t.hi);
  }
  out.order = order;
  out.tag = "composed";
  for (int n = out.lo; n <= out.hi; ++n) {
    JetPoly m = ts[0].at(n).with_order(order), inv = ts[0].inv_at(n).with_order(order);
    for (std::size_t k = 1; k < ts.size(); ++k) {
      m = jet_compose(ts[k].at(n), m, order);
      inv = jet_compose(inv, ts[k].inv_at(n), order);
    }
    out.map.push_back(m.prune(0.0));
    out.inverse.push_back(inv.prune(0.0));
  }
  return out;
}

struct TakensForm {
  TimeJetSeq w;     // center rows: A^c x_c + f^c(x_c)
  TimeJetSeq a_su;  // hyperbolic rows: A^{su}(x_c) v
  int order = 0;    // N0
  double structure_defect = 0;  // largest non-normal coefficient through order N0 on the trusted interior
  int trusted_lo = 0, trusted_hi = -1;

  // Normal-form map in all variables at time n.
  Vector apply(int n, const Vector& x) const {
    const VarLayout& l = w.at(n).vars();
    Vector y = Vector::Zero(l.dim());
    Vector c = w.at(n).evaluate(x), s = a_su.at(n).evaluate(x);
    auto cv = l.center_vars(), hv = l.hyperbolic_vars();
    for (std::size_t i = 0; i < cv.size(); ++i) y(cv[i]) = c(i);
    for (std::size_t i = 0; i < hv.size(); ++i) y(hv[i]) = s(i);
    return y;
  }
};

struct ConjugacyReport {
  std::vector<double> radii;
  std::vector<double> residuals;
  double slope = 0;
  bool exact = false;  // every residual at rounding level
  int n_lo = 0, n_hi = 0;
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double den = n * sxx - sx * sx;
  return den == 0 ? 0 : (n * sxy - sx * sy) / den;
}

// Residual of Psi_{n+1} o F_n - NF_n o Psi_n on spheres of the given radii.
inline ConjugacyReport conjugacy_report(const NonlinearSystem& original, const TransformSeq& psi, const TakensForm& nf,
                                        std::vector<double> radii, int n_lo, int n_hi, unsigned seed = 11) {
  ConjugacyReport rep;
  rep.radii = radii;
  rep.n_lo = n_lo;
  rep.n_hi = n_hi;
  const int d = original.dim();
  for (double r : radii) {
    auto pts = detail::sphere_points(d, r, 12, seed);
    double worst = 0;
    for (int n = n_lo; n <= n_hi; ++n)
      for (const auto& x : pts) {
        Vector lhs = psi.at(n + 1).evaluate(original.apply(n, x));
        Vector rhs = nf.apply(n, psi.at(n).evaluate(x));
        worst = std::max(worst, (lhs - rhs).norm());
      }
    rep.residuals.push_back(worst);
  }
  rep.exact = true;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (rep.residuals[i] > 1e-13 * std::max(1.0, radii[i])) rep.exact = false;
  rep.slope = loglog_slope(radii, rep.residuals);
  return rep;
}

struct TakensResult {
  TakensForm form;
  TransformSeq psi;
  ConjugacyReport conjugacy;
  std::vector<StageReport> stages;
  CenterManifoldJets cm;
  NonlinearSystem reduced;  // final conjugated system (all orders kept)
};

namespace detail {

template <class F>
auto run_stage(const std::string& id, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), "stage " + id + ": " + e.what(), e.witness());
  }
}

inline TrichotomyData block_trichotomy(const NonlinearSystem& s) {
  const VarLayout& l = s.layout();
  const auto& bs = *s.block_spectra();
  Interval st{0, 0}, ce{1, 1}, un{0, 0};
  bool hs = false, hu = false;
  for (int b = 0; b < l.num_blocks(); ++b) {
    const Interval& iv = bs[b];
    switch (l.block(b).role) {
      case Role::stable: st = hs ? st.hull(iv) : iv; hs = true; break;
      case Role::unstable: un = hu ? un.hull(iv) : iv; hu = true; break;
      case Role::center: ce = iv; break;
      default: break;
    }
  }
  TrichotomyRates r;
  r.lambda_minus = std::min(ce.lo, 1.0);
  r.lambda_plus = std::max(ce.hi, 1.0);
  // placeholders for absent blocks, never used by the solvers
  if (!hs) st = {0.5 * r.lambda_minus * 0.5, 0.5 * r.lambda_minus * 0.5};
  if (!hu) un = {4.0 * r.lambda_plus, 4.0 * r.lambda_plus};
  r.mu_minus = st.lo;
  r.mu_plus = st.hi;
  r.rho_minus = un.lo;
  r.rho_plus = un.hi;
  int ds = 0, dc = 0, du = 0;
  for (const auto& b : l.blocks()) (b.role == Role::stable ? ds : b.role == Role::center ? dc : du) += b.dim;
  auto t = coordinate_trichotomy(ds, dc, du, s.lo(), s.hi(), r, s.K());
  // layouts are ordered stable, center, unstable; anything else is rejected here
  if (!(VarLayout::split(ds, dc, du) == l)) fail(ErrorKind::invalid_argument, "the pipeline expects a stable, center, unstable block order");
  return t;
}

}  // namespace detail

struct TakensOptions {
  std::vector<double> radii{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  int check_halfwidth = 2;  // conjugacy residual sampled at n in [-h, h]
};

// Straighten, eliminate center coupling orders 1..N0, then hyperbolic orders 2..N0; jets truncated at N0 + 1.
inline TakensResult takens_normal_form(const NonlinearSystem& input, int N0, int J, double tol, const TakensOptions& opt = {}) {
  if (N0 < 1) fail(ErrorKind::invalid_argument, "N0 must be at least 1");
  if (J < N0) fail(ErrorKind::invalid_argument, "J must be at least N0 so that every term of degree <= N0 is treated");
  NonlinearSystem system = input;
  ensure_block_spectra(system);
  detail::require_split_system(system, "takens_normal_form");
  const VarLayout& l = system.layout();
  const int T = N0 + 1;
  TimeJetSeq trunc;
  trunc.lo = system.lo();
  trunc.hi = system.hi();
  for (const auto& f : system.nonlinearity().jets) trunc.jets.push_back(JetPoly(f.vars(), f.target(), T) + f.with_order(T));
  NonlinearSystem cur = system.with_nonlinearity(std::move(trunc));

  TakensResult res;
  std::vector<TransformSeq> ts;
  if (l.center_dim() > 0 && !l.hyperbolic_vars().empty()) {
    res.cm = detail::run_stage("center-manifold", [&] { return center_manifold_jets(cur, detail::block_trichotomy(cur), T, tol); });
    TransformSeq t = straightening_transform(res.cm, l, T);
    cur = detail::run_stage("straighten", [&] { return conjugate(cur, t); });
    StageReport sr;
    sr.stage = "straighten";
    sr.band = res.cm.band;
    sr.max_rate = res.cm.diag.max_rate;
    sr.residual = res.cm.residual;
    res.stages.push_back(sr);
    ts.push_back(std::move(t));
    for (int p = 1; p <= N0; ++p) {
      StageReport r;
      auto [next, tr] = detail::run_stage("center-" + std::to_string(p), [&] { return eliminate_center_order(cur, p, J, tol, &r); });
      cur = std::move(next);
      ts.push_back(std::move(tr));
      res.stages.push_back(r);
    }
  }
  if (!l.hyperbolic_vars().empty()) {
    for (int p = 2; p <= N0; ++p) {
      StageReport r;
      auto [next, tr] = detail::run_stage("hyperbolic-" + std::to_string(p), [&] { return eliminate_hyperbolic_order(cur, p, J, tol, &r); });
      cur = std::move(next);
      ts.push_back(std::move(tr));
      res.stages.push_back(r);
    }
  }
  if (ts.empty()) {
    TransformSeq id;
    id.lo = cur.lo();
    id.hi = cur.hi();
    id.order = T;
    id.tag = "composed";
    for (int n = id.lo; n <= id.hi; ++n) {
      id.map.push_back(JetPoly::identity(l, T));
      id.inverse.push_back(JetPoly::identity(l, T));
    }
    res.psi = std::move(id);
  } else {
    res.psi = compose_transforms(ts, T);
  }

  // normal form through order N0
  int band = 0;
  for (const auto& s : res.stages) band = std::max(band, s.band);
  TakensForm& nf = res.form;
  nf.order = N0;
  nf.w = TimeJetSeq(cur.lo(), cur.hi(), JetPoly(l, l.center_part(), N0));
  nf.a_su = TimeJetSeq(cur.lo(), cur.hi(), JetPoly(l, l.hyperbolic_part(), N0));
  nf.trusted_lo = cur.lo() + band;
  nf.trusted_hi = cur.hi() - band;
  for (int n = cur.lo(); n <= cur.hi(); ++n) {
    JetPoly g = cur.full_map(n);
    const bool trusted = n >= nf.trusted_lo && n <= nf.trusted_hi;
    if (l.center_dim() > 0) {
      JetPoly c = center_rows(g);
      nf.w.at(n) = v_part(c, 0).with_order(N0);
      if (trusted)
        for (const auto& [m, v] : c.terms()) {
          int vd = v_degree(m, l);
          if (vd >= 1 && vd <= N0) nf.structure_defect = std::max(nf.structure_defect, v.cwiseAbs().maxCoeff());
        }
    }
    if (!l.hyperbolic_vars().empty()) {
      JetPoly h = hyperbolic_rows(g);
      nf.a_su.at(n) = v_part(h, 1).with_order(N0);
      if (trusted)
        for (const auto& [m, v] : h.terms()) {
          int vd = v_degree(m, l);
          if (vd == 0 || (vd >= 2 && vd <= N0)) nf.structure_defect = std::max(nf.structure_defect, v.cwiseAbs().maxCoeff());
        }
    }
  }
  res.reduced = cur;
  const int c0 = std::clamp(0, cur.lo(), cur.hi());
  int nlo = std::max(c0 - opt.check_halfwidth, std::max(res.psi.lo, cur.lo()));
  int nhi = std::min(c0 + opt.check_halfwidth, std::min(res.psi.hi - 1, cur.hi()));
  res.conjugacy = conjugacy_report(input, res.psi, nf, opt.radii, nlo, nhi);
  return res;
}

// --- appendix verifier -------------------------------------------------------------------------

// R1: terms of x_u-degree at most floor(N/2); R2 = R - R1.
inline std::pair<JetPoly, JetPoly> taylor_split(const JetPoly& r, int N) {
  if (N < 0) fail(ErrorKind::invalid_argument, "N must be nonnegative");
  const VarLayout& l = r.vars();
  auto udeg = [&](const Monomial& m) {
    int s = 0;
    for (int i = 0; i < l.dim(); ++i)
      if (l.role_of(i) == Role::unstable) s += m.e[i];
    return s;
  };
  JetPoly r1 = r.filtered([&](const Monomial& m) { return udeg(m) <= N / 2; });
  JetPoly r2 = r.filtered([&](const Monomial& m) { return udeg(m) > N / 2; });
  return {r1, r2};
}

struct HomotopyResult {
  Vector h;
  double residual = 0;
  int terms = 0;
  Vector H;  // time-one map of the flow of (h, 1), when requested
  double flow_defect = 0;
};

namespace detail {

struct HomotopyField {
  JetPoly g0, r1;
  std::vector<JetPoly> dg0, dr1;
  double tol;

  HomotopyField(const JetPoly& g, const JetPoly& r, double t) : g0(g), r1(r), tol(t) {
    for (int i = 0; i < g.nvars(); ++i) {
      dg0.push_back(jet_derivative(g0, i));
      dr1.push_back(jet_derivative(r1, i));
    }
  }
  Vector map(const Vector& x, double tau) const { return g0.evaluate(x) + tau * r1.evaluate(x); }
  Matrix jac(const Vector& x, double tau) const {
    Matrix j(g0.target_dim(), g0.nvars());
    for (int i = 0; i < g0.nvars(); ++i) j.col(i) = dg0[i].evaluate(x) + tau * dr1[i].evaluate(x);
    return j;
  }
  // h(x, tau) = -sum_{n>=1} (D G^n(x))^{-1} R1(G^{n-1} x)
  Vector field(const Vector& x0, double tau, int* count = nullptr) const {
    const int d = static_cast<int>(x0.size());
    Vector h = Vector::Zero(d), x = x0;
    Matrix jinv = Matrix::Identity(d, d);
    double prev = INFINITY;
    for (int n = 1; n <= 100000; ++n) {
      jinv = jinv * jac(x, tau).fullPivLu().inverse();
      Vector term = jinv * r1.evaluate(x);
      h -= term;
      double t = term.norm();
      if (count) *count = n;
      if (t < tol) return h;
      if (n > 10 && t >= prev) fail(ErrorKind::divergence, "homotopy series terms stopped decreasing after " + std::to_string(n) + " terms");
      if (!std::isfinite(t)) fail(ErrorKind::divergence, "homotopy series diverged");
      prev = t;
      x = map(x, tau);
    }
    fail(ErrorKind::divergence, "homotopy series did not reach the tolerance");
  }
  Vector flow(const Vector& x, int steps) const {
    Vector y = x;
    const double dt = 1.0 / steps;
    for (int k = 0; k < steps; ++k) {
      double t = k * dt;
      Vector k1 = field(y, t);
      Vector k2 = field(y + 0.5 * dt * k1, t + 0.5 * dt);
      Vector k3 = field(y + 0.5 * dt * k2, t + 0.5 * dt);
      Vector k4 = field(y + dt * k3, t + dt);
      y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
  }
};

}  // namespace detail

// Series solution of D G_tau(x) h(x) - h(G_tau x) + R1(x) = 0 with G_tau = G0 + tau R1.
inline HomotopyResult homotopy_series_conjugacy(const JetPoly& g0, const JetPoly& r1, const Vector& x, double tau, double tol,
                                                bool with_flow = false, int flow_steps = 64) {
  if (g0.nvars() != g0.target_dim() || !(r1.vars() == g0.vars()) || r1.target_dim() != g0.target_dim())
    fail(ErrorKind::invalid_argument, "G0 and R1 must be self-maps of the same variables");
  if (x.size() != g0.nvars()) fail(ErrorKind::invalid_argument, "point dimension mismatch");
  detail::HomotopyField f(g0, r1, tol);
  HomotopyResult res;
  res.h = f.field(x, tau, &res.terms);
  Vector hg = f.field(f.map(x, tau), tau);
  res.residual = (f.jac(x, tau) * res.h - hg + r1.evaluate(x)).norm();
  if (with_flow) {
    res.H = f.flow(x, flow_steps);
    Vector hg0 = f.flow(f.map(x, 0.0), flow_steps);
    res.flow_defect = (hg0 - f.map(res.H, 1.0)).norm();
  }
  return res;
}

}  // namespace ntnf
