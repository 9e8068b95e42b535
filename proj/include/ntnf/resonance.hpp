#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ntnf/errors.hpp"
#include "ntnf/interval.hpp"
#include "ntnf/spectral.hpp"

namespace ntnf {

using MultiIndex = std::vector<int>;

inline int order(const MultiIndex& q) {
  int s = 0;
  for (int v : q) s += v;
  return s;
}

// Streams every q in N^r with lo <= |q| <= hi, graded, lexicographically decreasing within a degree.
class MultiIndexEnumerator {
public:
  MultiIndexEnumerator(int r, int lo, int hi) : r_(r), deg_(lo), hi_(hi) {
    if (r < 0 || lo < 0 || lo > hi) fail(ErrorKind::invalid_argument, "need r >= 0 and 0 <= lo <= hi");
    reset_degree();
  }

  bool next(MultiIndex& out) {
    if (done_) return false;
    out = cur_;
    advance();
    return true;
  }

private:
  void reset_degree() {
    if (r_ == 0) {
      // only the empty index, of degree 0
      done_ = deg_ > 0;
      cur_.clear();
      return;
    }
    cur_.assign(r_, 0);
    cur_[0] = deg_;
  }

  void advance() {
    if (r_ == 0) {
      done_ = true;
      return;
    }
    int i = r_ - 2;
    while (i >= 0 && cur_[i] == 0) --i;
    if (i < 0) {
      if (++deg_ > hi_) {
        done_ = true;
        return;
      }
      reset_degree();
      return;
    }
    int tail = 0;
    for (int k = i + 1; k < r_; ++k) {
      tail += cur_[k];
      cur_[k] = 0;
    }
    cur_[i] -= 1;
    cur_[i + 1] = tail + 1;
  }

  int r_, deg_, hi_;
  bool done_ = false;
  MultiIndex cur_;
};

inline double count_multi_indices(int r, int lo, int hi) {
  double total = 0;
  for (int p = lo; p <= hi; ++p) {
    // C(p + r - 1, r - 1)
    double c = 1;
    for (int k = 1; k <= r - 1; ++k) c = c * (p + k) / k;
    total += r == 0 ? (p == 0) : c;
  }
  return total;
}

inline std::vector<MultiIndex> enumerate_multi_indices(int r, int lo, int hi) {
  if (count_multi_indices(r, lo, hi) > 1e7) fail(ErrorKind::range, "multi-index enumeration exceeds the 1e7 budget");
  std::vector<MultiIndex> out;
  MultiIndexEnumerator e(r, lo, hi);
  MultiIndex q;
  while (e.next(q)) out.push_back(q);
  return out;
}

// Log-space endpoints of the product interval.
struct LogInterval {
  double lo = 0, hi = 0;
  Interval exp() const { return {std::exp(lo), std::exp(hi)}; }
};

inline LogInterval log_power_product(const SpectrumResult& s, const MultiIndex& q, int center_power) {
  if (static_cast<int>(q.size()) != s.r()) fail(ErrorKind::invalid_argument, "multi-index length must equal the number of hyperbolic intervals");
  if (center_power < 0) fail(ErrorKind::invalid_argument, "center power must be nonnegative");
  LogInterval li;
  for (int i = 0; i < s.r(); ++i) {
    if (q[i] < 0) fail(ErrorKind::invalid_argument, "multi-index entries must be nonnegative");
    if (q[i] == 0) continue;
    li.lo += q[i] * std::log(s.hyperbolic[i].lo);
    li.hi += q[i] * std::log(s.hyperbolic[i].hi);
  }
  if (center_power > 0) {
    li.lo += center_power * std::log(s.center.lo);
    li.hi += center_power * std::log(s.center.hi);
  }
  return li;
}

inline Interval interval_power_product(const SpectrumResult& s, const MultiIndex& q, int center_power) {
  return log_power_product(s, q, center_power).exp();
}

struct Violation {
  std::string condition;  // "NR-1" or "NR-2"
  MultiIndex q;
  int target = -1;  // hyperbolic interval index, -1 for the center
  Interval target_interval;
  Interval product;
  double overlap = 0;  // log-length of the intersection
};

struct BranchRecord {
  std::string condition;
  MultiIndex q;
  int target = -1;
  bool above = false;  // product entirely above the target interval
};

struct GapReport {
  bool pass = true;
  bool left_defined = false, right_defined = false;
  double left_margin = 0;   // log(nu-^N) - log(b_ell)
  double right_margin = 0;  // log(a_{ell+1}) - log(nu+^N)
  bool suspension_checked = false;
  bool suspension_pass = true;
  double suspension_upper_margin = 0;  // -log(mu2) - N log(nu+)
  double suspension_lower_margin = 0;  // N log(nu-) - log(mu1)
  std::vector<std::string> notes;
};

struct NonResonanceReport {
  int N = 0;
  double varsigma = 0;
  bool nr1_pass = true, nr2_pass = true;
  bool gap_pass = true;
  std::vector<Violation> violations;
  std::vector<BranchRecord> branches;
  GapReport gap;
  bool pass() const { return nr1_pass && nr2_pass; }
};

inline GapReport check_gap(const SpectrumResult& s, int N, std::optional<std::pair<double, double>> mu12 = std::nullopt) {
  if (N < 1) fail(ErrorKind::invalid_argument, "gap order must be positive");
  GapReport g;
  const double lnm = std::log(s.center.lo), lnp = std::log(s.center.hi);
  int ell = 0;
  for (const auto& iv : s.hyperbolic)
    if (iv.hi < s.center.lo) ++ell;
  if (ell > 0) {
    g.left_defined = true;
    g.left_margin = N * lnm - std::log(s.hyperbolic[ell - 1].hi);
    if (!(g.left_margin > 0)) g.pass = false;
  } else {
    g.notes.push_back("no hyperbolic interval below the center; left gap is vacuous");
  }
  if (ell < s.r()) {
    g.right_defined = true;
    g.right_margin = std::log(s.hyperbolic[ell].lo) - N * lnp;
    if (!(g.right_margin > 0)) g.pass = false;
  } else {
    g.notes.push_back("no hyperbolic interval above the center; right gap is vacuous");
  }
  if (mu12) {
    g.suspension_checked = true;
    auto [mu1, mu2] = *mu12;
    g.suspension_upper_margin = mu2 > 0 ? -std::log(mu2) - N * lnp : INFINITY;
    g.suspension_lower_margin = mu1 > 0 ? N * lnm - std::log(mu1) : INFINITY;
    g.suspension_pass = g.suspension_upper_margin > 0 && g.suspension_lower_margin > 0;
  }
  return g;
}

inline NonResonanceReport check_non_resonance(const SpectrumResult& spectrum, int N, double varsigma = 1e-6) {
  if (N < 2) fail(ErrorKind::invalid_argument, "non-resonance order N must be at least 2");
  const SpectrumResult s = inflate_spectrum(spectrum, varsigma);
  const int r = s.r();
  if (count_multi_indices(r, 1, N) > 1e7) fail(ErrorKind::range, "multi-index enumeration exceeds the 1e7 budget");
  NonResonanceReport rep;
  rep.N = N;
  rep.varsigma = varsigma;

  auto log_iv = [](const Interval& iv) { return LogInterval{std::log(iv.lo), std::log(iv.hi)}; };
  auto test = [&](const char* cond, const MultiIndex& q, int target, const Interval& tiv) {
    LogInterval p = log_power_product(s, q, N);
    LogInterval t = log_iv(tiv);
    if (p.lo <= t.hi && t.lo <= p.hi) {
      Violation v;
      v.condition = cond;
      v.q = q;
      v.target = target;
      v.target_interval = tiv;
      v.product = p.exp();
      v.overlap = std::min(p.hi, t.hi) - std::max(p.lo, t.lo);
      rep.violations.push_back(std::move(v));
      return false;
    }
    rep.branches.push_back({cond, q, target, p.lo > t.hi});
    return true;
  };

  MultiIndexEnumerator e(r, 1, N);
  MultiIndex q;
  while (e.next(q)) {
    if (!test("NR-1", q, -1, s.center)) rep.nr1_pass = false;
    if (order(q) >= 2)
      for (int j = 0; j < r; ++j)
        if (!test("NR-2", q, j, s.hyperbolic[j])) rep.nr2_pass = false;
  }
  rep.gap = check_gap(spectrum, N);
  rep.gap_pass = rep.gap.pass;
  return rep;
}

}  // namespace ntnf
