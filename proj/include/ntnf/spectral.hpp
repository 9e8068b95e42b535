#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ntnf/cocycle.hpp"
#include "ntnf/interval.hpp"

namespace ntnf {

struct DichotomyVerdict {
  double gamma = 1.0;
  bool has_dichotomy = false;
  double margin = 0.0;     // sigma_min at the base window
  double margin_2w = 0.0;  // sigma_min at the doubled window
  double margin_limit = 0.0;
  int rank = -1;  // stable dimension when dichotomic
};

struct DichotomyOptions {
  int window = 16;
  double threshold = 1e-4;
  double limit_threshold = 4e-3;
};

struct SpectrumOptions {
  double gamma_lo = 0.0;  // 0 picks a range from the cocycle bounds
  double gamma_hi = 0.0;
  int samples = 64;
  int refine_iters = 10;
  DichotomyOptions test;
};

struct SpectrumResult {
  int dim = 0;
  std::vector<Interval> hyperbolic;  // sorted, 1 excluded
  std::vector<int> hyperbolic_dims;
  Interval center{1.0, 1.0};
  int center_dim = 0;
  bool has_center = false;
  int ell = 0;  // number of hyperbolic intervals below the center
  std::vector<DichotomyVerdict> samples;
  std::vector<std::string> warnings;

  int r() const { return static_cast<int>(hyperbolic.size()); }

  // All intervals in increasing order, center included when present.
  std::vector<Interval> all_intervals() const {
    std::vector<Interval> out = hyperbolic;
    if (has_center) out.push_back(center);
    std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    return out;
  }
};

namespace detail {

// Smallest eigenvalue of a symmetric block-tridiagonal matrix given by its diagonal and superdiagonal blocks.
inline double smallest_eigenvalue(const std::vector<Matrix>& diag, const std::vector<Matrix>& upper) {
  const int nb = static_cast<int>(diag.size());
  const int b = static_cast<int>(diag[0].rows());
  const int n = nb * b;
  const int kd = nb > 1 ? 2 * b - 1 : b - 1;
  const int ldab = kd + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  auto put = [&](int i, int j, double v) {  // upper band, column major, i <= j
    if (j - i > kd) return;
    ab[static_cast<std::size_t>(j) * ldab + (kd + i - j)] = v;
  };
  for (int k = 0; k < nb; ++k) {
    for (int j = 0; j < b; ++j)
      for (int i = 0; i <= j; ++i) put(k * b + i, k * b + j, diag[k](i, j));
    if (k + 1 < nb)
      for (int j = 0; j < b; ++j)
        for (int i = 0; i < b; ++i) put(k * b + i, (k + 1) * b + j, upper[k](i, j));
  }
  lapack_int m = 0;
  std::vector<double> w(n), q(1), z(1);
  std::vector<lapack_int> ifail(n);
  double abstol = 2.0 * LAPACKE_dlamch('S');
  lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', n, kd, ab.data(), ldab, q.data(), 1, 0.0, 0.0, 1, 1,
                                   abstol, &m, w.data(), z.data(), 1, ifail.data());
  if (info != 0 || m < 1) fail(ErrorKind::conditioning, "banded eigensolver failed (info " + std::to_string(info) + ")");
  return std::max(w[0], 0.0);
}

// sigma_min of the free-boundary section (rows x_{n+1} - B_n x_n, n = -w..w-1, unknowns x_{-w..w}):
// detects failure of surjectivity.
inline double wide_section_sigma(const CocycleSpec& spec, double gamma, int w) {
  std::vector<Matrix> diag, upper;
  const int d = spec.dim();
  const Matrix id = Matrix::Identity(d, d);
  for (int n = -w; n < w; ++n) {
    Matrix b = spec.at(n) / gamma;
    diag.push_back(id + b * b.transpose());
    if (n + 1 < w) upper.push_back(-(spec.at(n + 1) / gamma).transpose());
  }
  return std::sqrt(smallest_eigenvalue(diag, upper));
}

// sigma_min of the clamped section (unknowns x_{-w+1..w-1}, same rows): detects bounded kernels.
inline double tall_section_sigma(const CocycleSpec& spec, double gamma, int w) {
  std::vector<Matrix> diag, upper;
  const int d = spec.dim();
  const Matrix id = Matrix::Identity(d, d);
  for (int k = -w + 1; k <= w - 1; ++k) {
    Matrix b = spec.at(k) / gamma;
    diag.push_back(id + b.transpose() * b);
    if (k + 1 <= w - 1) upper.push_back(-b.transpose());
  }
  return std::sqrt(smallest_eigenvalue(diag, upper));
}

// Removes the 1/length^2 approach of sigma^2 near resonance.
inline double extrapolate(double s1, double s2, double l1, double l2) {
  double v = (l2 * l2 * s2 * s2 - l1 * l1 * s1 * s1) / (l2 * l2 - l1 * l1);
  return std::sqrt(std::max(v, 0.0));
}

// Number of contracting directions of gamma^{-1}A over [-w, w), from accumulated QR growth.
// The frame is aligned on the steps before -w first; otherwise the initial rotation of the
// columns leaks growth from one diagonal entry into another.
inline int stable_count(const CocycleSpec& spec, double gamma, int w) {
  const int d = spec.dim();
  Matrix q = Matrix::Identity(d, d);
  Vector logs = Vector::Zero(d);
  const int start = -std::min(spec.window(), 2 * w);
  for (int n = start; n < w; ++n) {
    Eigen::HouseholderQR<Matrix> qr(spec.at(n) / gamma * q);
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    q = qr.householderQ();
    if (n >= -w)
      for (int i = 0; i < d; ++i) logs(i) += std::log(std::abs(r(i, i)));
  }
  int count = 0;
  for (int i = 0; i < d; ++i)
    if (logs(i) < 0) ++count;
  return count;
}

}  // namespace detail

inline DichotomyVerdict dichotomy_test(const CocycleSpec& spec, double gamma, const DichotomyOptions& opt = {}) {
  if (!(gamma > 0)) fail(ErrorKind::invalid_argument, "gamma must be positive");
  const int w = opt.window;
  if (w < 4) fail(ErrorKind::window_too_small, "dichotomy window must be at least 4");
  if (2 * w > spec.window()) fail(ErrorKind::window_too_small, "doubled dichotomy window does not fit the cocycle window");
  double wide1 = detail::wide_section_sigma(spec, gamma, w), wide2 = detail::wide_section_sigma(spec, gamma, 2 * w);
  double tall1 = detail::tall_section_sigma(spec, gamma, w), tall2 = detail::tall_section_sigma(spec, gamma, 2 * w);
  DichotomyVerdict v;
  v.gamma = gamma;
  v.margin = std::min(wide1, tall1);
  v.margin_2w = std::min(wide2, tall2);
  v.margin_limit = std::min(detail::extrapolate(wide1, wide2, 2 * w + 1, 4 * w + 1),
                            detail::extrapolate(tall1, tall2, 2 * w, 4 * w));
  v.has_dichotomy = v.margin > opt.threshold && v.margin_2w > opt.threshold && v.margin_2w >= 0.5 * v.margin &&
                    v.margin_limit > opt.limit_threshold;
  if (v.has_dichotomy) v.rank = detail::stable_count(spec, gamma, 2 * w);
  return v;
}

inline DichotomyVerdict dichotomy_test(const CocycleSpec& spec, double gamma, int window, double threshold) {
  DichotomyOptions opt;
  opt.window = window;
  opt.threshold = threshold;
  return dichotomy_test(spec, gamma, opt);
}

namespace detail {

struct SpectrumBuilder {
  const CocycleSpec& spec;
  const SpectrumOptions& opt;
  std::vector<DichotomyVerdict> extra;

  DichotomyVerdict test(double g) {
    auto v = dichotomy_test(spec, g, opt.test);
    extra.push_back(v);
    return v;
  }

  // a dichotomic, b resonant (either order); returns the geometric midpoint of the final bracket.
  double edge(double dich, double res) {
    for (int i = 0; i < opt.refine_iters; ++i) {
      double mid = std::sqrt(dich * res);
      if (test(mid).has_dichotomy)
        dich = mid;
      else
        res = mid;
    }
    return std::sqrt(dich * res);
  }

  // Both ends dichotomic with different ranks: locate the spectral pieces hidden in between.
  void hidden(const DichotomyVerdict& a, const DichotomyVerdict& b, std::vector<std::pair<Interval, int>>& out, int depth) {
    if (std::log(b.gamma / a.gamma) < 1e-5 || depth > 60) {
      out.push_back({Interval{a.gamma, b.gamma}, b.rank - a.rank});
      return;
    }
    double mid = std::sqrt(a.gamma * b.gamma);
    auto m = test(mid);
    if (!m.has_dichotomy) {
      out.push_back({Interval{edge(a.gamma, mid), edge(b.gamma, mid)}, b.rank - a.rank});
      return;
    }
    if (m.rank == a.rank) {
      hidden(m, b, out, depth + 1);
    } else if (m.rank == b.rank) {
      hidden(a, m, out, depth + 1);
    } else {
      hidden(a, m, out, depth + 1);
      hidden(m, b, out, depth + 1);
    }
  }
};

}  // namespace detail

inline SpectrumResult compute_spectrum(const CocycleSpec& spec, SpectrumOptions opt = {}) {
  if (opt.gamma_lo <= 0 || opt.gamma_hi <= 0) {
    opt.gamma_lo = 0.5 / spec.sup_inv_norm();
    opt.gamma_hi = 2.0 * spec.sup_norm();
  }
  if (!(opt.gamma_lo < opt.gamma_hi)) fail(ErrorKind::invalid_argument, "need 0 < gamma_lo < gamma_hi");
  if (opt.samples < 16) fail(ErrorKind::invalid_argument, "at least 16 gamma samples are required");
  const int d = spec.dim();

  SpectrumResult res;
  res.dim = d;
  std::vector<DichotomyVerdict> grid(opt.samples);
  const double step = std::log(opt.gamma_hi / opt.gamma_lo) / (opt.samples - 1);
  for (int k = 0; k < opt.samples; ++k) grid[k] = dichotomy_test(spec, opt.gamma_lo * std::exp(step * k), opt.test);
  res.samples = grid;
  bool any = false;
  for (const auto& v : grid) any = any || v.has_dichotomy;
  if (!any) fail(ErrorKind::inconsistency, "every gamma sample is resonant; the cocycle bounds or the threshold are off");

  detail::SpectrumBuilder b{spec, opt, {}};
  std::vector<std::pair<Interval, int>> pieces;
  int k = 0;
  int last_rank = 0;
  const int S = opt.samples;
  while (k < S) {
    if (grid[k].has_dichotomy) {
      if (k > 0 && grid[k - 1].has_dichotomy && grid[k - 1].rank != grid[k].rank) b.hidden(grid[k - 1], grid[k], pieces, 0);
      last_rank = grid[k].rank;
      ++k;
      continue;
    }
    int k2 = k;
    while (k2 + 1 < S && !grid[k2 + 1].has_dichotomy) ++k2;
    double lo, hi;
    int rank_left = k > 0 ? grid[k - 1].rank : 0;
    int rank_right = k2 + 1 < S ? grid[k2 + 1].rank : d;
    if (k == 0) {
      lo = grid[0].gamma;
      res.warnings.push_back("resonant set reaches the lower end of the gamma range");
    } else {
      lo = b.edge(grid[k - 1].gamma, grid[k].gamma);
    }
    if (k2 == S - 1) {
      hi = grid[S - 1].gamma;
      res.warnings.push_back("resonant set reaches the upper end of the gamma range");
    } else {
      hi = b.edge(grid[k2 + 1].gamma, grid[k2].gamma);
    }
    (void)last_rank;
    pieces.push_back({Interval{lo, hi}, rank_right - rank_left});
    k = k2 + 1;
  }
  std::sort(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) { return x.first.lo < y.first.lo; });
  if (static_cast<int>(pieces.size()) > d)
    fail(ErrorKind::inconsistency, "detected " + std::to_string(pieces.size()) + " spectral intervals in dimension " +
                                       std::to_string(d) + "; the dichotomy threshold is misconfigured");
  for (const auto& [iv, dim] : pieces) {
    if (iv.contains(1.0) && !res.has_center) {
      res.center = iv;
      res.center_dim = dim;
      res.has_center = true;
    } else {
      res.hyperbolic.push_back(iv);
      res.hyperbolic_dims.push_back(dim);
    }
  }
  res.ell = 0;
  for (const auto& iv : res.hyperbolic)
    if (iv.hi < 1.0) ++res.ell;
  for (auto& v : b.extra) res.samples.push_back(v);
  std::sort(res.samples.begin(), res.samples.end(), [](const auto& x, const auto& y) { return x.gamma < y.gamma; });
  return res;
}

inline SpectrumResult compute_spectrum(const CocycleSpec& spec, double gamma_lo, double gamma_hi, int samples,
                                       int refine_iters) {
  SpectrumOptions opt;
  opt.gamma_lo = gamma_lo;
  opt.gamma_hi = gamma_hi;
  opt.samples = samples;
  opt.refine_iters = refine_iters;
  return compute_spectrum(spec, opt);
}

inline SpectrumResult inflate_spectrum(const SpectrumResult& s, double varsigma) {
  if (varsigma < 0) fail(ErrorKind::invalid_argument, "inflation must be nonnegative");
  SpectrumResult out = s;
  if (varsigma == 0) return out;
  for (auto& iv : out.hyperbolic) iv = {iv.lo - varsigma, iv.hi + varsigma};
  out.center = {out.center.lo - varsigma, out.center.hi + varsigma};
  std::vector<Interval> all = out.hyperbolic;
  all.push_back(out.center);
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  if (all.front().lo <= 0) fail(ErrorKind::overlap, "inflation pushes an interval through zero");
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].lo <= all[i - 1].hi)
      fail(ErrorKind::overlap, "inflation merges [" + std::to_string(all[i - 1].lo) + ", " + std::to_string(all[i - 1].hi) +
                                   "] and [" + std::to_string(all[i].lo) + ", " + std::to_string(all[i].hi) + "]");
  return out;
}

struct SplittingOptions {
  DichotomyOptions test;
  double varsigma = 0.0;
  double settle = 1e-14;  // target accuracy of the transported subspaces
  unsigned seed = 12345;
};

namespace detail {

inline Matrix random_frame(int d, int k, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  Matrix m(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = g(eng);
  return orthonormalize(m);
}

// Dominant k-dimensional subspaces transported forward (or backward) across the whole window.
inline std::vector<Matrix> transported_frames(const CocycleSpec& spec, int k, bool forward, unsigned seed) {
  const int W = spec.window();
  std::vector<Matrix> frames(2 * W + 1);
  Matrix f = random_frame(spec.dim(), k, seed);
  if (forward) {
    frames[0] = f;
    for (int n = -W; n < W; ++n) {
      f = orthonormalize(spec.at(n) * f);
      frames[n + 1 + W] = f;
    }
  } else {
    frames[2 * W] = f;
    for (int n = W - 1; n >= -W; --n) {
      f = orthonormalize(spec.inv_at(n) * f);
      frames[n + W] = f;
    }
  }
  return frames;
}

}  // namespace detail

// Projections grouping the intervals below the center, the center, and those above.
inline TrichotomyData extract_splitting(const CocycleSpec& spec, const SpectrumResult& spectrum, const SplittingOptions& opt = {}) {
  const int d = spec.dim();
  const int W = spec.window();
  std::vector<Interval> below, above;
  int k1 = 0, ku = 0;
  for (int i = 0; i < spectrum.r(); ++i) {
    const Interval& iv = spectrum.hyperbolic[i];
    int dim = i < static_cast<int>(spectrum.hyperbolic_dims.size()) ? spectrum.hyperbolic_dims[i] : 1;
    if (iv.hi < spectrum.center.lo || (!spectrum.has_center && iv.hi < 1.0)) {
      below.push_back(iv);
      k1 += dim;
    } else {
      above.push_back(iv);
      ku += dim;
    }
  }
  const int kc = spectrum.has_center ? spectrum.center_dim : 0;
  if (k1 + kc + ku != d) fail(ErrorKind::inconsistency, "interval dimensions do not add up to the state dimension");
  int groups = (k1 > 0) + (kc > 0) + (ku > 0);
  if (groups < 2 && spectrum.r() + spectrum.has_center < 2)
    fail(ErrorKind::invalid_argument, "splitting needs at least two spectral intervals");

  // gamma in each gap and the worst transport contraction
  double worst_ratio = 0.0;
  auto check_gap = [&](double left_hi, double right_lo, int expected_rank) {
    if (!(left_hi < right_lo)) fail(ErrorKind::gap, "spectral gap is empty");
    double g = std::sqrt(left_hi * right_lo);
    auto v = dichotomy_test(spec, g, opt.test);
    if (!v.has_dichotomy || v.rank != expected_rank)
      fail(ErrorKind::gap, "gap at gamma=" + std::to_string(g) + " is too narrow for a reliable splitting");
    worst_ratio = std::max(worst_ratio, left_hi / right_lo);
  };
  const Interval mid = spectrum.has_center ? spectrum.center : Interval{1.0, 1.0};
  if (k1 > 0) check_gap(below.back().hi, kc > 0 ? mid.lo : above.front().lo, k1);
  if (ku > 0 && kc > 0) check_gap(mid.hi, above.front().lo, k1 + kc);
  int burn = static_cast<int>(std::ceil(std::log(opt.settle) / std::log(std::max(worst_ratio, 1e-300))));
  burn = std::max(burn, 1);
  if (2 * burn + 8 > 2 * W)
    fail(ErrorKind::window_too_small, "cocycle window too short to settle the splitting (needs burn-in " + std::to_string(burn) + ")");

  std::vector<Matrix> s1, u1, s2, u2;
  if (k1 > 0) {
    s1 = detail::transported_frames(spec, k1, false, opt.seed);
    u1 = detail::transported_frames(spec, d - k1, true, opt.seed + 1);
  }
  if (ku > 0) {
    s2 = detail::transported_frames(spec, d - ku, false, opt.seed + 2);
    u2 = detail::transported_frames(spec, ku, true, opt.seed + 3);
  }

  TrichotomyData t;
  t.lo = -W + burn;
  t.hi = W - burn;
  for (int n = t.lo; n <= t.hi; ++n) {
    const int i = n + W;
    Matrix bs = k1 > 0 ? s1[i] : Matrix(d, 0);
    Matrix bu = ku > 0 ? u2[i] : Matrix(d, 0);
    Matrix bc(d, kc);
    if (kc > 0) {
      Matrix sp = ku > 0 ? s2[i] : Matrix(Matrix::Identity(d, d));
      Matrix up = k1 > 0 ? u1[i] : Matrix(Matrix::Identity(d, d));
      Matrix stack(d, sp.cols() + up.cols());
      stack << sp, -up;
      Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
      Matrix v = svd.matrixV().rightCols(kc);
      bc = orthonormalize(sp * v.topRows(sp.cols()));
    }
    Matrix frame(d, d);
    frame << bs, bc, bu;
    Matrix inv = guarded_inverse(frame, 1e10);
    auto proj = [&](int off, int k) {
      Matrix e = Matrix::Zero(d, d);
      for (int j = off; j < off + k; ++j) e(j, j) = 1.0;
      return Matrix(frame * e * inv);
    };
    t.ps.push_back(proj(0, k1));
    t.pc.push_back(proj(k1, kc));
    t.pu.push_back(proj(k1 + kc, ku));
  }

  const double s = opt.varsigma;
  auto& r = t.rates;
  r.lambda_minus = std::min(mid.lo - s, 1.0);
  r.lambda_plus = std::max(mid.hi + s, 1.0);
  if (k1 > 0) {
    r.mu_minus = below.front().lo - s;
    r.mu_plus = below.back().hi + s;
  } else {
    r.mu_plus = r.mu_minus = 0.5 * r.lambda_minus;
  }
  if (ku > 0) {
    r.rho_minus = above.front().lo - s;
    r.rho_plus = above.back().hi + s;
  } else {
    r.rho_minus = r.rho_plus = 2.0 * r.lambda_plus;
  }
  t.K = 1e300;
  auto rep = verify_trichotomy(spec, t);
  t.K = std::max(1.0, rep.K_obs);
  return t;
}

}  // namespace ntnf
