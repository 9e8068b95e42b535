#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ntnf/cocycle.hpp"
#include "ntnf/homological.hpp"

namespace ntnf {

struct CenterManifoldJets {
  TimeJetSeq phi;  // x_c -> (x_s, x_u), terms of degree 2..order
  int order = 0;
  double residual = 0;  // worst coefficient residual on the trusted interior
  double bound = 0;     // largest coefficient
  int band = 0;
  GradedDiagnostics diag;

  int trusted_lo() const { return phi.lo + band; }
  int trusted_hi() const { return phi.hi - band; }
};

namespace detail {

// x_c -> (x_c, phi(x_c)) as a map into all variables.
inline JetPoly graph_map(const JetPoly& phi, const VarLayout& full, int order) {
  const VarLayout& cl = phi.vars();
  JetPoly g = lift_rows(phi, full.hyperbolic_vars(), full).with_order(order);
  const auto cv = full.center_vars();
  for (int i = 0; i < cl.dim(); ++i) g.add_term(Monomial::unit(i), cv[i], 1.0);
  return g;
}

// phi as a function of all variables (through x_c only).
inline JetPoly lift_to_full(const JetPoly& phi, const VarLayout& full, int order) {
  std::vector<JetPoly> xc;
  for (int k : full.center_vars()) {
    JetPoly e(full, 1, order);
    e.add_term(Monomial::unit(k), 0, 1.0);
    xc.push_back(e);
  }
  return jet_compose(phi, xc, Truncation::order(order));
}

struct InvarianceResidual {
  const NonlinearSystem* sys;
  int order;
  JetPoly operator()(int n, const JetPoly& pn, const JetPoly& pn1) const {
    const VarLayout& l = sys->layout();
    Truncation t = Truncation::order(order);
    JetPoly fx = jet_compose(sys->full_map(n), graph_map(pn, l, order), t);
    JetPoly r = jet_compose(pn1, center_rows(fx), t);
    r -= hyperbolic_rows(fx);
    return r;
  }
};

inline std::vector<Interval> trichotomy_block_rates(const VarLayout& l, const TrichotomyRates& r) {
  std::vector<Interval> out;
  for (const auto& b : l.blocks()) {
    if (b.role == Role::stable) out.push_back({r.mu_minus, r.mu_plus});
    else if (b.role == Role::center) out.push_back({r.lambda_minus, r.lambda_plus});
    else out.push_back({r.rho_minus, r.rho_plus});
  }
  return out;
}

}  // namespace detail

// Invariance pi_su F_n(x_c, phi_n) = phi_{n+1}(pi_c F_n(x_c, phi_n)) solved degree by degree.
inline CenterManifoldJets center_manifold_jets(const NonlinearSystem& system, const TrichotomyData& data, int order, double tol) {
  const VarLayout& l = system.layout();
  detail::require_split_system(system, "center_manifold_jets");
  if (order < 1) fail(ErrorKind::invalid_argument, "center manifold order must be positive");
  if (order > kMaxDegree) fail(ErrorKind::range, "center manifold order too large");
  data.validate_rates();
  const int lo = std::max(system.lo(), data.lo), hi = std::min(system.hi(), data.hi);
  if (hi - lo < 2) fail(ErrorKind::window_too_small, "center_manifold_jets: window too small");
  // the projections must be the coordinate ones
  const int d = l.dim();
  for (int n = lo; n <= hi; ++n) {
    Matrix pc = Matrix::Zero(d, d);
    for (int i : l.center_vars()) pc(i, i) = 1;
    if ((data.center(n) - pc).cwiseAbs().maxCoeff() > 1e-8)
      fail(ErrorKind::invalid_argument, "center_manifold_jets needs coordinate trichotomy projections");
  }
  const auto& r = data.rates;
  for (int j = 2; j <= order; ++j) {
    if (l.center_dim() > 0 && l.hyperbolic_vars().size() > 0) {
      bool has_s = false, has_u = false;
      for (const auto& b : l.blocks()) {
        has_s = has_s || b.role == Role::stable;
        has_u = has_u || b.role == Role::unstable;
      }
      if (has_s && !(r.mu_plus < std::pow(r.lambda_minus, j)))
        fail(ErrorKind::gap, "spectral gap violated at order " + std::to_string(j) + ": mu+ >= lambda-^" + std::to_string(j));
      if (has_u && !(std::pow(r.lambda_plus, j) < r.rho_minus))
        fail(ErrorKind::gap, "spectral gap violated at order " + std::to_string(j) + ": lambda+^" + std::to_string(j) + " >= rho-");
    }
  }

  CenterManifoldJets cm;
  cm.order = order;
  const VarLayout cl = l.center_part(), hl = l.hyperbolic_part();
  if (cl.dim() == 0 || hl.dim() == 0) {
    // hyperbolic case (or no hyperbolic part): nothing to solve
    cm.phi = TimeJetSeq(lo, hi, JetPoly(cl.dim() ? cl : VarLayout(), hl, order));
    return cm;
  }
  NonlinearSystem sub = system.with_window(lo, hi);
  auto rates = detail::trichotomy_block_rates(l, r);
  GradedProblem pr;
  pr.vars = cl;
  pr.target = hl;
  pr.p = 0;
  pr.j_lo = 2;
  pr.j_hi = order;
  pr.var_rates = {rates.at(l.center_block())};
  pr.target_rates = detail::rates_of(rates, l.hyperbolic_blocks());
  pr.K = data.K;
  pr.tol = tol;
  pr.lo = lo;
  pr.hi = hi;
  const CocycleSpec* a = &system.linear();
  const auto cb = detail::center_block_list(l);
  const auto hb = l.hyperbolic_blocks();
  pr.lambda = [a, l, cb](int n) { return block_of_matrix(a->at(n), l, cb); };
  pr.lambda_inv = [a, l, cb](int n) { return block_of_matrix(a->inv_at(n), l, cb); };
  pr.b = [a, l, hb](int n) { return block_of_matrix(a->at(n), l, hb); };
  pr.b_inv = [a, l, hb](int n) { return block_of_matrix(a->inv_at(n), l, hb); };
  pr.residual = detail::InvarianceResidual{&sub, order};
  pr.what = "center_manifold_jets";
  cm.phi = TimeJetSeq(lo, hi, JetPoly(cl, hl, order));
  cm.diag = solve_graded(pr, cm.phi);
  cm.band = cm.diag.band;
  cm.residual = cm.diag.residual;
  for (const auto& p : cm.phi.jets) cm.bound = std::max(cm.bound, p.max_abs());
  if (cm.residual > tol) fail(ErrorKind::conditioning, "center manifold residual " + std::to_string(cm.residual) + " above tolerance");
  return cm;
}

struct InvarianceRow {
  double radius = 0;
  double residual = 0;
};

struct InvarianceReport {
  std::vector<InvarianceRow> rows;
  double gamma1 = 0, gamma2 = 0;
  double forward_constant = 0;   // max |orbit(m)| / (|x| gamma2^{m-n})
  double backward_constant = 0;  // max |orbit(m)| / (|x| gamma1^{m-n})
  int horizon = 0;
};

namespace detail {

inline std::vector<Vector> sphere_points(int dim, double radius, int count, unsigned seed) {
  std::vector<Vector> pts;
  for (int i = 0; i < dim; ++i) {
    for (double s : {-1.0, 1.0}) {
      Vector x = Vector::Zero(dim);
      x(i) = s * radius;
      pts.push_back(x);
    }
  }
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  for (int k = 0; k < count && dim > 1; ++k) {
    Vector x(dim);
    for (int i = 0; i < dim; ++i) x(i) = g(eng);
    pts.push_back(radius * x / x.norm());
  }
  return pts;
}

// y with F_n(y) = x by Newton's method from the linear guess.
inline Vector invert_step(const NonlinearSystem& s, int n, const Vector& x) {
  Vector y = s.linear().inv_at(n) * x;
  JetPoly f = s.full_map(n);
  for (int it = 0; it < 30; ++it) {
    Vector r = s.apply(n, y) - x;
    if (r.norm() <= 1e-15 * std::max(1.0, x.norm())) break;
    y -= jet_jacobian(f, y).fullPivLu().solve(r);
  }
  return y;
}

}  // namespace detail

// Sampled invariance defect on spheres |x_c| = radius and orbit growth checks along the graph.
inline InvarianceReport verify_center_invariance(const NonlinearSystem& system, const CenterManifoldJets& cm,
                                                 const std::vector<double>& radii, double gamma1 = 0, double gamma2 = 0,
                                                 const TrichotomyRates* rates = nullptr, int horizon = 12) {
  InvarianceReport rep;
  const VarLayout& l = system.layout();
  const auto cv = l.center_vars(), hv = l.hyperbolic_vars();
  const int dc = static_cast<int>(cv.size());
  int lo = std::max(cm.trusted_lo(), system.lo()), hi = std::min(cm.trusted_hi(), system.hi());
  if (rates) {
    int N = cm.order;
    if (gamma1 <= 0) gamma1 = std::sqrt(rates->mu_plus * std::pow(rates->lambda_minus, N));
    if (gamma2 <= 0) gamma2 = std::sqrt(rates->rho_minus * std::pow(rates->lambda_plus, N));
  }
  rep.gamma1 = gamma1;
  rep.gamma2 = gamma2;
  rep.horizon = horizon;
  auto point = [&](int n, const Vector& xc) {
    Vector x = Vector::Zero(l.dim());
    for (int i = 0; i < dc; ++i) x(cv[i]) = xc(i);
    if (!hv.empty() && dc > 0) {
      Vector p = cm.phi.at(n).evaluate(xc);
      for (std::size_t k = 0; k < hv.size(); ++k) x(hv[k]) = p(k);
    }
    return x;
  };
  for (double r : radii) {
    InvarianceRow row{r, 0.0};
    if (dc > 0) {
      auto pts = detail::sphere_points(dc, r, 6, 99);
      for (int n = lo; n < hi; ++n)
        for (const auto& xc : pts) {
          Vector y = system.apply(n, point(n, xc));
          Vector yc(dc), ysu(hv.size());
          for (int i = 0; i < dc; ++i) yc(i) = y(cv[i]);
          for (std::size_t k = 0; k < hv.size(); ++k) ysu(k) = y(hv[k]);
          Vector pred = hv.empty() ? Vector() : cm.phi.at(n + 1).evaluate(yc);
          if (!hv.empty()) row.residual = std::max(row.residual, (ysu - pred).norm());
        }
    }
    rep.rows.push_back(row);
  }
  // orbit growth from the smallest radius
  if (dc > 0 && gamma1 > 0 && gamma2 > 0 && !radii.empty()) {
    double r = *std::min_element(radii.begin(), radii.end());
    auto pts = detail::sphere_points(dc, r, 2, 17);
    int n0 = (lo + hi) / 2;
    for (const auto& xc : pts) {
      Vector x0 = point(n0, xc);
      Vector x = x0;
      for (int m = n0 + 1; m <= std::min(hi, n0 + horizon); ++m) {
        x = system.apply(m - 1, x);
        rep.forward_constant = std::max(rep.forward_constant, x.norm() / (x0.norm() * std::pow(gamma2, m - n0)));
      }
      x = x0;
      for (int m = n0 - 1; m >= std::max(lo, n0 - horizon); --m) {
        x = detail::invert_step(system, m, x);
        rep.backward_constant = std::max(rep.backward_constant, x.norm() / (x0.norm() * std::pow(gamma1, m - n0)));
      }
    }
  }
  return rep;
}

// F~_n = T_{n+1} o F_n o T_n^{-1} with T_n(x_c, v) = (x_c, v - phi_n(x_c)).
inline NonlinearSystem straighten(const NonlinearSystem& system, const CenterManifoldJets& cm) {
  const VarLayout& l = system.layout();
  const int order = std::max(system.max_order(), cm.order);
  if (order > kMaxDegree) fail(ErrorKind::range, "composition order overflow");
  if (l.center_dim() == 0 || l.hyperbolic_vars().empty()) return system;
  const int lo = std::max(system.lo(), cm.phi.lo), hi = std::min(system.hi(), cm.phi.hi) - 1;
  if (hi < lo) fail(ErrorKind::window_too_small, "straighten: empty window");
  const auto hv = l.hyperbolic_vars();
  auto shift = [&](int n, double sign) {
    JetPoly t = JetPoly::identity(l, order);
    JetPoly phi = detail::lift_to_full(cm.phi.at(n), l, order);
    t += sign * lift_rows(phi, hv, l);
    return t;
  };
  TimeJetSeq f;
  f.lo = lo;
  f.hi = hi;
  for (int n = lo; n <= hi; ++n) {
    Truncation t = Truncation::order(order);
    JetPoly g = jet_compose(system.full_map(n), shift(n, 1.0), t);
    g = jet_compose(shift(n + 1, -1.0), g, t);
    f.jets.push_back(nonlinear_part(g).prune(0.0));
  }
  return system.with_nonlinearity(std::move(f));
}

}  // namespace ntnf
