#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ntnf/interval.hpp"
#include "ntnf/jets.hpp"
#include "ntnf/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace ntnf {

// One coefficient family of fixed target block, x_c-degree j and hyperbolic block degrees q.
struct BranchClass {
  int target_block = 0;
  int j = 0;
  std::vector<int> q;
  Interval growth;
  int direction = 0;  // +1: sum over the past, -1: sum over the future
  double rate = 0;
  int truncation = 0;  // m*
};

struct GradedDiagnostics {
  int band = 0;  // untrusted boundary band width
  double max_rate = 0;
  double residual = 0;  // worst residual over the trusted interior
  std::vector<BranchClass> classes;
};

// Equation U_{n+1}(Lambda_n x) - B_n U_n(x) + R_n(x) = 0 in the unknown U_n of fixed v-degree p,
// solved x_c-order by x_c-order. `residual` evaluates the whole left-hand side for the current U;
// while order j is being solved its order-j part is zero, so the callback yields R_n at order j.
struct GradedProblem {
  VarLayout vars;
  VarLayout target;
  int p = 0;
  int j_lo = 0, j_hi = 0;
  std::vector<Interval> var_rates;     // per block of `vars`
  std::vector<Interval> target_rates;  // per block of `target`
  double K = 1.0;
  double tol = 1e-12;
  int lo = 0, hi = 0;
  std::function<Matrix(int)> lambda, lambda_inv;  // block diagonal, vars x vars
  std::function<Matrix(int)> b, b_inv;            // target x target
  std::function<JetPoly(int, const JetPoly&, const JetPoly&)> residual;
  std::string what = "graded solve";
};

namespace detail {

inline std::string witness_string(int block, int j, const std::vector<int>& q) {
  std::ostringstream os;
  os << "target block " << block << ", x_c-degree " << j << ", q=(";
  for (std::size_t i = 0; i < q.size(); ++i) os << (i ? "," : "") << q[i];
  os << ")";
  return os.str();
}

inline Interval class_growth(const GradedProblem& pr, int tblock, const std::vector<int>& bdeg) {
  const Interval& t = pr.target_rates.at(tblock);
  double llo = std::log(t.lo), lhi = std::log(t.hi);
  for (int b = 0; b < pr.vars.num_blocks(); ++b) {
    if (bdeg[b] == 0) continue;
    const Interval& r = pr.var_rates.at(b);
    llo -= bdeg[b] * std::log(r.hi);
    lhi -= bdeg[b] * std::log(r.lo);
  }
  return {std::exp(llo), std::exp(lhi)};
}

// Monomials of c-degree j and v-degree p.
inline std::vector<Monomial> graded_monomials(const VarLayout& l, int p, int j) {
  std::vector<Monomial> out;
  const auto& basis = MonomialBasis::get(l.dim(), p + j);
  for (int i = 0; i < basis.size(); ++i)
    if (basis.degree(i) == p + j && c_degree(basis.at(i), l) == j) out.push_back(basis.at(i));
  return out;
}

// Matrix of psi -> psi o L on the span of `mons` (columns: source monomial, rows: image monomial).
inline Matrix pullback_matrix(const VarLayout& l, const std::vector<Monomial>& mons, const Matrix& lin) {
  const int nb = static_cast<int>(mons.size());
  if (nb == 0) return Matrix(0, 0);
  int deg = mons[0].degree();
  JetPoly outer(l, nb, deg);
  for (int i = 0; i < nb; ++i) outer.add_term(mons[i], i, 1.0);
  JetPoly inner = JetPoly::linear(l, l, lin, deg);
  JetPoly img = jet_compose(outer, inner, Truncation::order(deg));
  Matrix s = Matrix::Zero(nb, nb);
  for (int r = 0; r < nb; ++r) s.row(r) = img.coeff(mons[r]).transpose();
  return s;
}

}  // namespace detail

inline GradedDiagnostics solve_graded(const GradedProblem& pr, TimeJetSeq& U) {
  const int t = pr.target.dim();
  if (pr.hi - pr.lo < 2) fail(ErrorKind::window_too_small, pr.what + ": window too small");
  if (U.lo != pr.lo || U.hi != pr.hi) fail(ErrorKind::invalid_argument, pr.what + ": unknown has the wrong window");
  GradedDiagnostics diag;
  const VarLayout& l = pr.vars;
  const int cb = l.center_block();

  for (int j = pr.j_lo; j <= pr.j_hi; ++j) {
    auto mons = detail::graded_monomials(l, pr.p, j);
    const int nb = static_cast<int>(mons.size());
    if (nb == 0 || t == 0) continue;
    const int dim = nb * t;

    // classification of every coefficient
    std::vector<int> dir(dim);
    std::vector<double> rate(dim);
    std::vector<int> cls(dim);
    std::vector<BranchClass> classes;
    for (int m = 0; m < nb; ++m) {
      auto bdeg = block_degrees(mons[m], l);
      std::vector<int> q;
      for (int b = 0; b < l.num_blocks(); ++b)
        if (b != cb) q.push_back(bdeg[b]);
      for (int k = 0; k < t; ++k) {
        int tb = pr.target.block_of(k);
        int found = -1;
        for (std::size_t c = 0; c < classes.size(); ++c)
          if (classes[c].target_block == tb && classes[c].q == q) found = static_cast<int>(c);
        if (found < 0) {
          BranchClass bc;
          bc.target_block = tb;
          bc.j = j;
          bc.q = q;
          bc.growth = detail::class_growth(pr, tb, bdeg);
          if (bc.growth.hi < 1.0) {
            bc.direction = 1;
            bc.rate = bc.growth.hi;
          } else if (bc.growth.lo > 1.0) {
            bc.direction = -1;
            bc.rate = 1.0 / bc.growth.lo;
          } else {
            fail(ErrorKind::resonance, pr.what + ": resonant coefficient family (" + detail::witness_string(tb, j, q) + ")",
                 detail::witness_string(tb, j, q));
          }
          if (bc.rate > 0.999)
            fail(ErrorKind::conditioning, pr.what + ": contraction rate " + std::to_string(bc.rate) + " too close to 1 (" +
                                              detail::witness_string(tb, j, q) + ")");
          classes.push_back(bc);
          found = static_cast<int>(classes.size()) - 1;
        }
        int idx = m * t + k;
        dir[idx] = classes[found].direction;
        rate[idx] = classes[found].rate;
        cls[idx] = found;
      }
    }

    // forcing and transport per step
    const int steps = pr.hi - pr.lo;
    std::vector<Matrix> G(steps), Ginv(steps);
    std::vector<Vector> g(steps);
    for (int s = 0; s < steps; ++s) {
      const int n = pr.lo + s;
      JetPoly R = pr.residual(n, U.at(n), U.at(n + 1));
      Vector r(dim);
      for (int m = 0; m < nb; ++m) r.segment(m * t, t) = R.coeff(mons[m]);
      Matrix S = detail::pullback_matrix(l, mons, pr.lambda_inv(n));
      Matrix Si = detail::pullback_matrix(l, mons, pr.lambda(n));
      Matrix B = pr.b(n), Bi = pr.b_inv(n);
      G[s] = Eigen::kroneckerProduct(S, B);
      Ginv[s] = Eigen::kroneckerProduct(Si, Bi);
      g[s] = -Eigen::kroneckerProduct(S, Matrix::Identity(t, t)) * r;
    }
    double gmax = 0;
    for (const auto& v : g) gmax = std::max(gmax, v.cwiseAbs().maxCoeff());
    for (auto& c : classes) {
      if (gmax > 0) c.truncation = std::max(0, static_cast<int>(std::ceil(std::log(pr.tol / (pr.K * gmax)) / std::log(c.rate))));
      diag.band = std::max(diag.band, c.truncation);
      diag.max_rate = std::max(diag.max_rate, c.rate);
    }
    for (auto& c : classes) diag.classes.push_back(c);

    Vector mp(dim), mm(dim);
    for (int i = 0; i < dim; ++i) {
      mp(i) = dir[i] > 0 ? 1.0 : 0.0;
      mm(i) = dir[i] < 0 ? 1.0 : 0.0;
    }
    std::vector<Vector> y(steps + 1, Vector::Zero(dim));
    for (int s = 0; s < steps; ++s) y[s + 1] = (G[s] * y[s] + g[s]).cwiseProduct(mp);
    Vector z = Vector::Zero(dim);
    for (int s = steps - 1; s >= 0; --s) {
      z = (Ginv[s] * (z - g[s])).cwiseProduct(mm);
      y[s] += z;
    }
    for (int s = 0; s <= steps; ++s) {
      JetPoly& u = U.at(pr.lo + s);
      for (int m = 0; m < nb; ++m) {
        Vector c = y[s].segment(m * t, t);
        if (c.cwiseAbs().maxCoeff() > 0) u.add_term(mons[m], c);
      }
    }
  }

  if (2 * diag.band + 1 > pr.hi - pr.lo)
    fail(ErrorKind::window_too_small, pr.what + ": window too small for the requested tolerance (series length " +
                                          std::to_string(diag.band) + ")");
  for (int n = pr.lo + diag.band; n < pr.hi - diag.band; ++n) {
    JetPoly R = pr.residual(n, U.at(n), U.at(n + 1));
    for (const auto& [m, c] : R.terms()) {
      int cd = c_degree(m, l);
      if (v_degree(m, l) == pr.p && cd >= pr.j_lo && cd <= pr.j_hi) diag.residual = std::max(diag.residual, c.cwiseAbs().maxCoeff());
    }
  }
  return diag;
}

}  // namespace ntnf
