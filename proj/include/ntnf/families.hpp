#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntnf/cocycle.hpp"

namespace ntnf {

using json = nlohmann::json;

namespace detail {

inline Matrix matrix_param(const json& j, const std::string& key) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(ErrorKind::invalid_argument, "parameter '" + key + "' must be a number or a matrix");
  if (!j[0].is_array()) {
    // a flat list is read as a diagonal
    Matrix m = Matrix::Zero(j.size(), j.size());
    for (std::size_t i = 0; i < j.size(); ++i) m(i, i) = j[i].get<double>();
    return m;
  }
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) fail(ErrorKind::invalid_argument, "parameter '" + key + "' has ragged rows");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline std::vector<double> list_param(const json& j, std::size_t n, const std::string& key) {
  std::vector<double> out;
  if (j.is_number()) {
    out.assign(n, j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
    if (out.size() == 1) out.assign(n, out[0]);
    if (out.size() != n) fail(ErrorKind::invalid_argument, "parameter '" + key + "' has the wrong length");
  } else {
    fail(ErrorKind::invalid_argument, "parameter '" + key + "' must be a number or a list");
  }
  return out;
}

inline std::size_t list_len(const json& j) { return j.is_array() ? j.size() : 1; }

inline void check_keys(const json& params, std::initializer_list<const char*> allowed, const std::string& family) {
  if (!params.is_object()) fail(ErrorKind::invalid_argument, "family parameters must be an object");
  for (auto it = params.begin(); it != params.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::invalid_argument, "unknown parameter '" + it.key() + "' for family " + family);
  }
}

// Independent stream per (seed, n) so that random access stays deterministic.
inline std::mt19937_64 index_engine(std::uint64_t seed, int n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(static_cast<std::int64_t>(n) & 0xffffffffu), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

inline Matrix uniform_matrix(std::uint64_t seed, int n, int rows, int cols) {
  auto eng = index_engine(seed, n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix r(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) r(i, k) = u(eng);
  return r;
}

inline double ramp(double lo, double hi, int n, double tau) {
  double s = 0.5 * (1.0 + std::tanh(n / tau));
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * s);
}

}  // namespace detail

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"autonomous", "step", "quasiperiodic-diagonal", "random-bounded",
                                                 "block-trichotomic"};
  return names;
}

inline CocycleSpec builtin_family(const std::string& name, const json& params, std::uint64_t seed, int window) {
  using detail::matrix_param;
  if (name == "autonomous") {
    detail::check_keys(params, {"matrix"}, name);
    if (!params.contains("matrix")) fail(ErrorKind::invalid_argument, "autonomous family needs 'matrix'");
    Matrix a = matrix_param(params["matrix"], "matrix");
    if (a.rows() != a.cols()) fail(ErrorKind::invalid_argument, "autonomous matrix must be square");
    Matrix ai = guarded_inverse(a);
    return CocycleSpec(a.rows(), [a](int) { return a; }, [ai](int) { return ai; }, window, name);
  }
  if (name == "step") {
    detail::check_keys(params, {"left", "right", "switch"}, name);
    if (!params.contains("left") || !params.contains("right"))
      fail(ErrorKind::invalid_argument, "step family needs 'left' and 'right'");
    Matrix l = matrix_param(params["left"], "left"), r = matrix_param(params["right"], "right");
    if (l.rows() != r.rows() || l.rows() != l.cols() || r.rows() != r.cols())
      fail(ErrorKind::invalid_argument, "step matrices must be square of equal size");
    int sw = params.value("switch", 0);
    Matrix li = guarded_inverse(l), ri = guarded_inverse(r);
    return CocycleSpec(
        l.rows(), [l, r, sw](int n) { return n < sw ? l : r; }, [li, ri, sw](int n) { return n < sw ? li : ri; }, window,
        name);
  }
  if (name == "quasiperiodic-diagonal") {
    detail::check_keys(params, {"c", "beta", "omega", "phase"}, name);
    std::size_t d = std::max({detail::list_len(params.value("c", json(0.0))), detail::list_len(params.value("beta", json(0.3))),
                              detail::list_len(params.value("phase", json(0.0)))});
    auto c = detail::list_param(params.value("c", json(0.0)), d, "c");
    auto beta = detail::list_param(params.value("beta", json(0.3)), d, "beta");
    auto phase = detail::list_param(params.value("phase", json(0.0)), d, "phase");
    double omega = params.value("omega", 2.0 * std::numbers::pi * std::numbers::phi);
    auto diag = [=](int n, double sign) {
      Matrix m = Matrix::Zero(d, d);
      for (std::size_t i = 0; i < d; ++i) m(i, i) = std::exp(sign * (c[i] + beta[i] * std::cos(omega * n + phase[i])));
      return m;
    };
    return CocycleSpec(d, [diag](int n) { return diag(n, 1.0); }, [diag](int n) { return diag(n, -1.0); }, window, name);
  }
  if (name == "random-bounded") {
    detail::check_keys(params, {"base", "delta"}, name);
    if (!params.contains("base")) fail(ErrorKind::invalid_argument, "random-bounded family needs 'base'");
    Matrix base = matrix_param(params["base"], "base");
    if (base.rows() != base.cols()) fail(ErrorKind::invalid_argument, "base matrix must be square");
    double delta = params.value("delta", 0.01);
    int d = base.rows();
    auto gen = [base, delta, seed, d](int n) { return Matrix(base + delta * detail::uniform_matrix(seed, n, d, d)); };
    return CocycleSpec(d, gen, [gen](int n) { return guarded_inverse(gen(n)); }, window, name);
  }
  if (name == "block-trichotomic") {
    detail::check_keys(params, {"stable", "center", "unstable", "tau", "delta"}, name);
    struct Entry {
      double lo, hi;
      int group;
    };
    std::vector<Entry> entries;
    int g = 0;
    for (const char* key : {"stable", "center", "unstable"}) {
      if (params.contains(key)) {
        for (const auto& iv : params[key]) {
          double lo = iv.is_array() ? iv.at(0).get<double>() : iv.get<double>();
          double hi = iv.is_array() ? iv.at(iv.size() - 1).get<double>() : lo;
          if (!(lo > 0 && hi >= lo)) fail(ErrorKind::invalid_argument, std::string("bad interval in '") + key + "'");
          entries.push_back({lo, hi, g});
        }
      }
      ++g;
    }
    if (entries.empty()) fail(ErrorKind::invalid_argument, "block-trichotomic family needs at least one interval");
    double tau = params.value("tau", 4.0);
    double delta = params.value("delta", 0.0);
    int d = entries.size();
    auto base = [entries, tau, d](int n) {
      Matrix m = Matrix::Zero(d, d);
      for (int i = 0; i < d; ++i) m(i, i) = detail::ramp(entries[i].lo, entries[i].hi, n, tau);
      return m;
    };
    if (delta == 0.0) {
      return CocycleSpec(d, base, [base](int n) { return Matrix(base(n).inverse()); }, window, name);
    }
    auto gen = [base, entries, delta, seed, d](int n) {
      Matrix r = detail::uniform_matrix(seed, n, d, d);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
          if (entries[i].group != entries[k].group) r(i, k) = 0.0;
      return Matrix(base(n) + delta * r);
    };
    return CocycleSpec(d, gen, [gen](int n) { return guarded_inverse(gen(n)); }, window, name);
  }
  fail(ErrorKind::invalid_argument, "unknown cocycle family '" + name + "'");
}

}  // namespace ntnf
