#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ntnf/errors.hpp"
#include "ntnf/linalg.hpp"

namespace ntnf {

// Two-sided sequence of invertible matrices sampled on [-W, W].
class CocycleSpec {
public:
  using Generator = std::function<Matrix(int)>;

  CocycleSpec() = default;

  CocycleSpec(int dim, Generator gen, Generator inv_gen, int window, std::string name = {})
      : dim_(dim), window_(window), gen_(std::move(gen)), inv_gen_(std::move(inv_gen)), name_(std::move(name)) {
    if (dim <= 0) fail(ErrorKind::invalid_argument, "cocycle dimension must be positive");
    if (window < 0) fail(ErrorKind::range, "window must be nonnegative");
    if (!gen_) fail(ErrorKind::invalid_argument, "missing generator");
    a_.reserve(2 * window + 1);
    ainv_.reserve(2 * window + 1);
    for (int n = -window; n <= window; ++n) {
      Matrix a = gen_(n);
      if (a.rows() != dim || a.cols() != dim)
        fail(ErrorKind::invalid_argument, "generator returned a matrix of the wrong shape at n=" + std::to_string(n));
      Matrix ai = inv_gen_ ? inv_gen_(n) : guarded_inverse(a);
      double err = (a * ai - Matrix::Identity(dim, dim)).norm();
      if (!(err <= 1e-10 * std::max(1.0, norm2(a) * norm2(ai))))
        fail(ErrorKind::singular, "A_n is not invertible to tolerance at n=" + std::to_string(n));
      sup_norm_ = std::max(sup_norm_, norm2(a));
      sup_inv_norm_ = std::max(sup_inv_norm_, norm2(ai));
      a_.push_back(std::move(a));
      ainv_.push_back(std::move(ai));
    }
  }

  int dim() const { return dim_; }
  int window() const { return window_; }
  const std::string& name() const { return name_; }
  double sup_norm() const { return sup_norm_; }
  double sup_inv_norm() const { return sup_inv_norm_; }
  bool contains(int n) const { return n >= -window_ && n <= window_; }

  const Matrix& at(int n) const {
    check(n);
    return a_[n + window_];
  }
  const Matrix& inv_at(int n) const {
    check(n);
    return ainv_[n + window_];
  }

  const Generator& generator() const { return gen_; }
  const Generator& inv_generator() const { return inv_gen_; }

  CocycleSpec with_window(int window) const { return CocycleSpec(dim_, gen_, inv_gen_, window, name_); }

  CocycleSpec scaled(double c) const {
    if (c == 0.0) fail(ErrorKind::invalid_argument, "scaling by zero");
    auto g = gen_;
    auto gi = inv_gen_;
    Generator inv = gi ? Generator([gi, c](int n) { return Matrix(gi(n) / c); }) : Generator{};
    return CocycleSpec(dim_, [g, c](int n) { return Matrix(c * g(n)); }, inv, window_, name_);
  }

  // Diagonal block [offset, offset+size) as its own cocycle.
  CocycleSpec block(int offset, int size) const {
    if (offset < 0 || size <= 0 || offset + size > dim_) fail(ErrorKind::invalid_argument, "block outside the state dimension");
    auto g = gen_;
    auto gi = inv_gen_;
    Generator inv = gi ? Generator([gi, offset, size](int n) { return Matrix(gi(n).block(offset, offset, size, size)); })
                       : Generator{};
    return CocycleSpec(size, [g, offset, size](int n) { return Matrix(g(n).block(offset, offset, size, size)); }, inv,
                       window_, name_);
  }

private:
  void check(int n) const {
    if (!contains(n))
      fail(ErrorKind::out_of_window, "index " + std::to_string(n) + " outside window [" + std::to_string(-window_) + ", " +
                                         std::to_string(window_) + "]");
  }

  int dim_ = 0;
  int window_ = 0;
  Generator gen_;
  Generator inv_gen_;
  std::string name_;
  std::vector<Matrix> a_;
  std::vector<Matrix> ainv_;
  double sup_norm_ = 0.0;
  double sup_inv_norm_ = 0.0;
};

// A(m,n): forward product for m > n, inverse product for m < n.
inline Matrix eval_cocycle(const CocycleSpec& spec, int m, int n) {
  if (!spec.contains(m) || !spec.contains(n))
    fail(ErrorKind::out_of_window, "cocycle index (" + std::to_string(m) + ", " + std::to_string(n) + ") outside window");
  const int d = spec.dim();
  Matrix out = Matrix::Identity(d, d);
  if (m > n) {
    for (int k = n; k < m; ++k) out = spec.at(k) * out;
  } else if (m < n) {
    for (int k = n - 1; k >= m; --k) out = spec.inv_at(k) * out;
  }
  return out;
}

struct TrichotomyRates {
  double mu_minus = 0, mu_plus = 0;
  double lambda_minus = 1, lambda_plus = 1;
  double rho_minus = 0, rho_plus = 0;
};

struct TrichotomyData {
  int lo = 0, hi = -1;
  std::vector<Matrix> ps, pc, pu;
  double K = 1.0;
  TrichotomyRates rates;

  int size() const { return hi - lo + 1; }
  const Matrix& stable(int n) const { return ps.at(n - lo); }
  const Matrix& center(int n) const { return pc.at(n - lo); }
  const Matrix& unstable(int n) const { return pu.at(n - lo); }

  void validate_rates() const {
    const auto& r = rates;
    bool ok = 0 < r.mu_minus && r.mu_minus <= r.mu_plus && r.mu_plus < r.lambda_minus && r.lambda_minus <= 1 &&
              1 <= r.lambda_plus && r.lambda_plus < r.rho_minus && r.rho_minus <= r.rho_plus && K > 0;
    if (!ok) fail(ErrorKind::invalid_argument, "trichotomy rates must satisfy 0 < mu- <= mu+ < lambda- <= 1 <= lambda+ < rho- <= rho+");
  }
};

// Coordinate projections for a split d = ds + dc + du, constant in n.
inline TrichotomyData coordinate_trichotomy(int ds, int dc, int du, int lo, int hi, TrichotomyRates rates, double K = 1.0) {
  const int d = ds + dc + du;
  TrichotomyData t;
  t.lo = lo;
  t.hi = hi;
  t.K = K;
  t.rates = rates;
  Matrix ps = Matrix::Zero(d, d), pc = Matrix::Zero(d, d), pu = Matrix::Zero(d, d);
  for (int i = 0; i < ds; ++i) ps(i, i) = 1;
  for (int i = ds; i < ds + dc; ++i) pc(i, i) = 1;
  for (int i = ds + dc; i < d; ++i) pu(i, i) = 1;
  for (int n = lo; n <= hi; ++n) {
    t.ps.push_back(ps);
    t.pc.push_back(pc);
    t.pu.push_back(pu);
  }
  return t;
}

struct InequalityCheck {
  std::string name;
  double K_obs = 0;
  bool pass = true;
  int worst_m = 0, worst_n = 0;
};

struct TrichotomyReport {
  bool pass = true;
  double K_obs = 0;
  double sum_error = 0;
  double equivariance_error = 0;
  double idempotence_error = 0;
  bool projections_ok = true;
  std::vector<InequalityCheck> inequalities;
  std::string first_failure;
};

namespace detail {

inline int projection_rank(const Matrix& p) { return static_cast<int>(std::lround(p.trace())); }

}  // namespace detail

// Checks the projection identities and the six growth inequalities on every pair (m, n) in the data window.
inline TrichotomyReport verify_trichotomy(const CocycleSpec& spec, const TrichotomyData& data, double tol = 1e-9) {
  if (data.size() < 8) fail(ErrorKind::invalid_argument, "trichotomy window must contain at least 8 indices");
  if (!spec.contains(data.lo) || !spec.contains(data.hi)) fail(ErrorKind::out_of_window, "trichotomy window exceeds the cocycle window");
  data.validate_rates();
  const int d = spec.dim();
  const Matrix id = Matrix::Identity(d, d);

  TrichotomyReport rep;
  int rs = detail::projection_rank(data.stable(data.lo));
  int rc = detail::projection_rank(data.center(data.lo));
  int ru = detail::projection_rank(data.unstable(data.lo));
  for (int n = data.lo; n <= data.hi; ++n) {
    const Matrix &ps = data.stable(n), &pc = data.center(n), &pu = data.unstable(n);
    if (detail::projection_rank(ps) != rs || detail::projection_rank(pc) != rc || detail::projection_rank(pu) != ru)
      fail(ErrorKind::inconsistency, "projection ranks change along the window at n=" + std::to_string(n));
    rep.sum_error = std::max(rep.sum_error, (ps + pc + pu - id).norm());
    for (const Matrix* p : {&ps, &pc, &pu}) rep.idempotence_error = std::max(rep.idempotence_error, (*p * *p - *p).norm());
    if (n < data.hi) {
      const Matrix& a = spec.at(n);
      double scale = std::max(1.0, norm2(a));
      rep.equivariance_error = std::max(rep.equivariance_error, (data.stable(n + 1) * a - a * ps).norm() / scale);
      rep.equivariance_error = std::max(rep.equivariance_error, (data.center(n + 1) * a - a * pc).norm() / scale);
      rep.equivariance_error = std::max(rep.equivariance_error, (data.unstable(n + 1) * a - a * pu).norm() / scale);
    }
  }
  rep.projections_ok = rep.sum_error <= 1e-10 * std::max(1.0, double(d)) && rep.idempotence_error <= 1e-8 &&
                       rep.equivariance_error <= 1e-8;

  const auto& r = data.rates;
  // order matters: reports name the first failing inequality
  std::vector<InequalityCheck> checks = {{"stable-forward"},  {"unstable-backward"}, {"center-forward"},
                                         {"center-backward"}, {"stable-backward"},   {"unstable-forward"}};
  auto update = [](InequalityCheck& c, double norm, int steps, double rate, int m, int n) {
    if (norm == 0.0) return;
    double k = std::exp(std::log(norm) - steps * std::log(rate));
    if (k > c.K_obs) {
      c.K_obs = k;
      c.worst_m = m;
      c.worst_n = n;
    }
  };
  // Products are re-projected after every step (equivariance), so rounding leakage into the
  // faster directions cannot grow along the window.
  for (int n = data.lo; n <= data.hi; ++n) {
    Matrix fs = data.stable(n), fc = data.center(n), fu = data.unstable(n);
    for (int m = n; m <= data.hi; ++m) {
      if (m > n) {
        const Matrix& a = spec.at(m - 1);
        fs = data.stable(m) * (a * fs);
        fc = data.center(m) * (a * fc);
        fu = data.unstable(m) * (a * fu);
      }
      int k = m - n;
      if (rs) update(checks[0], norm2(fs), k, r.mu_plus, m, n);
      if (rc) update(checks[2], norm2(fc), k, r.lambda_plus, m, n);
      if (ru) update(checks[5], norm2(fu), k, r.rho_plus, m, n);
    }
    Matrix bs = data.stable(n), bc = data.center(n), bu = data.unstable(n);
    for (int m = n; m >= data.lo; --m) {
      if (m < n) {
        const Matrix& ai = spec.inv_at(m);
        bs = data.stable(m) * (ai * bs);
        bc = data.center(m) * (ai * bc);
        bu = data.unstable(m) * (ai * bu);
      }
      int k = m - n;  // nonpositive
      if (ru) update(checks[1], norm2(bu), k, r.rho_minus, m, n);
      if (rc) update(checks[3], norm2(bc), k, r.lambda_minus, m, n);
      if (rs) update(checks[4], norm2(bs), k, r.mu_minus, m, n);
    }
  }
  for (auto& c : checks) {
    c.pass = c.K_obs <= data.K * (1.0 + tol);
    rep.K_obs = std::max(rep.K_obs, c.K_obs);
    if (!c.pass && rep.first_failure.empty()) rep.first_failure = c.name;
  }
  rep.inequalities = std::move(checks);
  rep.pass = rep.projections_ok && rep.first_failure.empty();
  if (!rep.projections_ok && rep.first_failure.empty()) rep.first_failure = "projections";
  return rep;
}

}  // namespace ntnf
