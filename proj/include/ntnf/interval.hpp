#pragma once

#include <algorithm>
#include <cmath>

namespace ntnf {

struct Interval {
  double lo = 1.0;
  double hi = 1.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  double log_width() const { return std::log(hi) - std::log(lo); }
  bool degenerate() const { return lo == hi; }
  Interval scaled(double c) const { return {lo * c, hi * c}; }
  Interval hull(const Interval& o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

}  // namespace ntnf
