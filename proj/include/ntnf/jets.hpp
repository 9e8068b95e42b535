#pragma once

#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ntnf/errors.hpp"
#include "ntnf/linalg.hpp"

namespace ntnf {

enum class Role { stable, center, unstable, plain };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::stable: return "stable";
    case Role::center: return "center";
    case Role::unstable: return "unstable";
    case Role::plain: return "plain";
  }
  return "plain";
}

inline Role role_from_string(const std::string& s) {
  if (s == "stable") return Role::stable;
  if (s == "center") return Role::center;
  if (s == "unstable") return Role::unstable;
  if (s == "plain") return Role::plain;
  fail(ErrorKind::invalid_argument, "unknown block role '" + s + "'");
}

struct Block {
  Role role = Role::plain;
  int dim = 0;
  friend bool operator==(const Block&, const Block&) = default;
};

// Ordered coordinate blocks; variables are numbered block after block.
class VarLayout {
public:
  VarLayout() = default;
  explicit VarLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    int off = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (blocks_[b].dim <= 0) fail(ErrorKind::invalid_argument, "layout blocks must have positive dimension");
      offsets_.push_back(off);
      for (int i = 0; i < blocks_[b].dim; ++i) var_block_.push_back(static_cast<int>(b));
      off += blocks_[b].dim;
    }
  }

  static VarLayout plain(int n) { return n > 0 ? VarLayout({{Role::plain, n}}) : VarLayout(); }

  // stable, center, unstable blocks (empty ones omitted)
  static VarLayout split(int ds, int dc, int du) {
    std::vector<Block> b;
    if (ds > 0) b.push_back({Role::stable, ds});
    if (dc > 0) b.push_back({Role::center, dc});
    if (du > 0) b.push_back({Role::unstable, du});
    return VarLayout(std::move(b));
  }

  int dim() const { return static_cast<int>(var_block_.size()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int b) const { return blocks_.at(b); }
  int offset(int b) const { return offsets_.at(b); }
  int block_of(int var) const { return var_block_.at(var); }
  Role role_of(int var) const { return blocks_[var_block_.at(var)].role; }
  bool is_center(int var) const { return role_of(var) == Role::center; }

  int center_dim() const {
    int n = 0;
    for (const auto& b : blocks_)
      if (b.role == Role::center) n += b.dim;
    return n;
  }
  int center_block() const {
    for (int b = 0; b < num_blocks(); ++b)
      if (blocks_[b].role == Role::center) return b;
    return -1;
  }
  std::vector<int> vars_where(bool center) const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
      if (is_center(i) == center) out.push_back(i);
    return out;
  }
  std::vector<int> center_vars() const { return vars_where(true); }
  std::vector<int> hyperbolic_vars() const { return vars_where(false); }
  std::vector<int> hyperbolic_blocks() const {
    std::vector<int> out;
    for (int b = 0; b < num_blocks(); ++b)
      if (blocks_[b].role != Role::center) out.push_back(b);
    return out;
  }

  // Layout made of the listed blocks only, in order.
  VarLayout sub(const std::vector<int>& block_ids) const {
    std::vector<Block> b;
    for (int id : block_ids) b.push_back(blocks_.at(id));
    return VarLayout(std::move(b));
  }
  VarLayout center_part() const {
    int c = center_block();
    return c < 0 ? VarLayout() : sub({c});
  }
  VarLayout hyperbolic_part() const { return sub(hyperbolic_blocks()); }

  friend bool operator==(const VarLayout& a, const VarLayout& b) { return a.blocks_ == b.blocks_; }

private:
  std::vector<Block> blocks_;
  std::vector<int> offsets_;
  std::vector<int> var_block_;
};

inline constexpr int kMaxVars = 12;
inline constexpr int kMaxDegree = 31;

struct Monomial {
  std::array<std::uint8_t, kMaxVars> e{};

  Monomial() = default;
  static Monomial unit(int var) {
    Monomial m;
    m.e[var] = 1;
    return m;
  }
  static Monomial from(std::span<const int> exps) {
    if (exps.size() > kMaxVars) fail(ErrorKind::invalid_argument, "too many jet variables");
    Monomial m;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] < 0 || exps[i] > kMaxDegree) fail(ErrorKind::invalid_argument, "exponent out of range");
      m.e[i] = static_cast<std::uint8_t>(exps[i]);
    }
    return m;
  }
  static Monomial from(std::initializer_list<int> exps) {
    std::vector<int> v(exps);
    return from(std::span<const int>(v));
  }
  int operator[](int i) const { return e[i]; }
  int degree() const {
    int s = 0;
    for (auto v : e) s += v;
    return s;
  }
  Monomial operator+(const Monomial& o) const {
    Monomial m;
    for (int i = 0; i < kMaxVars; ++i) m.e[i] = static_cast<std::uint8_t>(e[i] + o.e[i]);
    return m;
  }
  std::uint64_t key() const {
    std::uint64_t k = 0;
    for (int i = 0; i < kMaxVars; ++i) k |= static_cast<std::uint64_t>(e[i]) << (5 * i);
    return k;
  }
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

// Total degree first, then lexicographically decreasing exponents.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    for (int i = 0; i < kMaxVars; ++i)
      if (a.e[i] != b.e[i]) return a.e[i] > b.e[i];
    return false;
  }
};

inline int v_degree(const Monomial& m, const VarLayout& l) {
  int s = 0;
  for (int i = 0; i < l.dim(); ++i)
    if (!l.is_center(i)) s += m.e[i];
  return s;
}
inline int c_degree(const Monomial& m, const VarLayout& l) {
  int s = 0;
  for (int i = 0; i < l.dim(); ++i)
    if (l.is_center(i)) s += m.e[i];
  return s;
}
// degree in each block of the layout
inline std::vector<int> block_degrees(const Monomial& m, const VarLayout& l) {
  std::vector<int> out(l.num_blocks(), 0);
  for (int i = 0; i < l.dim(); ++i) out[l.block_of(i)] += m.e[i];
  return out;
}

struct Truncation {
  int total = 0;
  int max_v = INT_MAX / 4;
  int max_c = INT_MAX / 4;

  static Truncation order(int n) { return Truncation{n}; }
  bool keeps(const Monomial& m, const VarLayout& l) const {
    if (m.degree() > total) return false;
    if (max_v < total && v_degree(m, l) > max_v) return false;
    if (max_c < total && c_degree(m, l) > max_c) return false;
    return true;
  }
};

class JetPoly {
public:
  using Terms = std::map<Monomial, Vector, GradedLex>;

  JetPoly() = default;
  JetPoly(VarLayout vars, VarLayout target, int max_order)
      : vars_(std::move(vars)), target_(std::move(target)), max_order_(max_order) {
    if (vars_.dim() > kMaxVars) fail(ErrorKind::invalid_argument, "at most 12 jet variables are supported");
    if (max_order < 0 || max_order > kMaxDegree) fail(ErrorKind::invalid_argument, "jet order out of range");
  }
  JetPoly(VarLayout vars, int target_dim, int max_order) : JetPoly(std::move(vars), VarLayout::plain(target_dim), max_order) {}

  static JetPoly identity(const VarLayout& l, int max_order) {
    JetPoly p(l, l, max_order);
    for (int i = 0; i < l.dim(); ++i) {
      Vector c = Vector::Zero(l.dim());
      c(i) = 1;
      p.add_term(Monomial::unit(i), c);
    }
    return p;
  }
  static JetPoly linear(const VarLayout& vars, const VarLayout& target, const Matrix& m, int max_order) {
    JetPoly p(vars, target, max_order);
    for (int i = 0; i < vars.dim(); ++i) p.add_term(Monomial::unit(i), m.col(i));
    return p;
  }
  static JetPoly constant(const VarLayout& vars, double c, int max_order) {
    JetPoly p(vars, 1, max_order);
    p.add_term(Monomial{}, Vector::Constant(1, c));
    return p;
  }

  const VarLayout& vars() const { return vars_; }
  const VarLayout& target() const { return target_; }
  int nvars() const { return vars_.dim(); }
  int target_dim() const { return target_.dim(); }
  int max_order() const { return max_order_; }
  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add_term(const Monomial& m, const Vector& c) {
    if (c.size() != target_dim()) fail(ErrorKind::invalid_argument, "coefficient size does not match the jet target");
    if (m.degree() > max_order_) return;
    auto it = terms_.find(m);
    if (it == terms_.end())
      terms_.emplace(m, c);
    else
      it->second += c;
  }
  void add_term(const Monomial& m, int component, double v) {
    Vector c = Vector::Zero(target_dim());
    c(component) = v;
    add_term(m, c);
  }
  void set_term(const Monomial& m, const Vector& c) {
    if (m.degree() > max_order_) return;
    terms_[m] = c;
  }
  void erase(const Monomial& m) { terms_.erase(m); }

  Vector coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Vector(Vector::Zero(target_dim())) : it->second;
  }

  Vector evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != nvars()) fail(ErrorKind::invalid_argument, "evaluation point has the wrong dimension");
    Vector out = Vector::Zero(target_dim());
    for (const auto& [m, c] : terms_) {
      double w = 1;
      for (int i = 0; i < nvars(); ++i)
        for (int k = 0; k < m.e[i]; ++k) w *= x[i];
      out += w * c;
    }
    return out;
  }
  Vector evaluate(const Vector& x) const { return evaluate(std::span<const double>(x.data(), x.size())); }

  double max_abs() const {
    double m = 0;
    for (const auto& [k, c] : terms_) m = std::max(m, c.cwiseAbs().maxCoeff());
    return m;
  }

  // drops coefficients whose entries are all below eps
  JetPoly& prune(double eps = 0.0) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->second.cwiseAbs().maxCoeff() <= eps)
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }

  template <class Pred>
  JetPoly filtered(Pred keep) const {
    JetPoly out(vars_, target_, max_order_);
    for (const auto& [m, c] : terms_)
      if (keep(m)) out.terms_.emplace(m, c);
    return out;
  }

  JetPoly truncated(const Truncation& t) const {
    JetPoly out(vars_, target_, std::min(max_order_, t.total));
    for (const auto& [m, c] : terms_)
      if (t.keeps(m, vars_)) out.terms_.emplace(m, c);
    return out;
  }

  JetPoly with_order(int n) const {
    JetPoly out(vars_, target_, n);
    for (const auto& [m, c] : terms_)
      if (m.degree() <= n) out.terms_.emplace(m, c);
    return out;
  }

  // scalar component i as a one-dimensional jet
  JetPoly component(int i) const {
    JetPoly out(vars_, 1, max_order_);
    for (const auto& [m, c] : terms_)
      if (c(i) != 0.0) out.terms_.emplace(m, Vector::Constant(1, c(i)));
    return out;
  }

  // rows [offset, offset+n) of the target, relabelled by the given layout
  JetPoly rows(int offset, int n, const VarLayout& target) const {
    JetPoly out(vars_, target, max_order_);
    for (const auto& [m, c] : terms_) {
      Vector s = c.segment(offset, n);
      if (s.cwiseAbs().maxCoeff() > 0) out.terms_.emplace(m, s);
    }
    return out;
  }

  // embeds this jet's target as rows [offset, ...) of a bigger target
  JetPoly embedded(const VarLayout& target, int offset) const {
    JetPoly out(vars_, target, max_order_);
    for (const auto& [m, c] : terms_) {
      Vector v = Vector::Zero(target.dim());
      v.segment(offset, c.size()) = c;
      out.terms_.emplace(m, v);
    }
    return out;
  }

  JetPoly& operator+=(const JetPoly& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  JetPoly& operator-=(const JetPoly& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add_term(m, Vector(-c));
    return *this;
  }
  JetPoly& operator*=(double s) {
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }
  friend JetPoly operator+(JetPoly a, const JetPoly& b) { return a += b; }
  friend JetPoly operator-(JetPoly a, const JetPoly& b) { return a -= b; }
  friend JetPoly operator*(double s, JetPoly a) { return a *= s; }

  // left-multiplies every coefficient by a matrix (target change)
  JetPoly mapped(const Matrix& m, const VarLayout& new_target) const {
    if (m.cols() != target_dim() || m.rows() != new_target.dim()) fail(ErrorKind::invalid_argument, "matrix shape mismatch");
    JetPoly out(vars_, new_target, max_order_);
    for (const auto& [k, c] : terms_) out.terms_.emplace(k, m * c);
    return out;
  }

private:
  void check_same(const JetPoly& o) const {
    if (!(o.vars_ == vars_) || o.target_dim() != target_dim()) fail(ErrorKind::invalid_argument, "jet shapes differ");
  }

  VarLayout vars_;
  VarLayout target_;
  int max_order_ = 0;
  Terms terms_;
};

inline Vector jet_evaluate(const JetPoly& p, const Vector& x) { return p.evaluate(x); }

inline double max_abs_diff(const JetPoly& a, const JetPoly& b) {
  JetPoly d = a;
  d -= b;
  return d.max_abs();
}

// --- dense kernels -------------------------------------------------------------------------

namespace detail {

// All monomials in n variables of degree <= D, in graded-lex order, with a product table.
class MonomialBasis {
public:
  MonomialBasis(int n, int D) : n_(n), D_(D) {
    if (n == 0) {
      mons_.push_back(Monomial{});
      deg_.push_back(0);
    }
    for (int deg = 0; n > 0 && deg <= D; ++deg) {
      std::vector<int> cur(n, 0);
      gen(cur, 0, deg);
    }
    for (int i = 0; i < size(); ++i) index_[mons_[i].key()] = i;
    if (size() <= 800) {
      table_.assign(static_cast<std::size_t>(size()) * size(), -1);
      for (int i = 0; i < size(); ++i)
        for (int j = 0; j < size(); ++j)
          if (deg_[i] + deg_[j] <= D) table_[static_cast<std::size_t>(i) * size() + j] = index_.at((mons_[i] + mons_[j]).key());
    }
  }

  static const MonomialBasis& get(int n, int D) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<MonomialBasis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n, D}];
    if (!slot) slot = std::make_unique<MonomialBasis>(n, D);
    return *slot;
  }

  int size() const { return static_cast<int>(mons_.size()); }
  int nvars() const { return n_; }
  int max_degree() const { return D_; }
  const Monomial& at(int i) const { return mons_[i]; }
  int degree(int i) const { return deg_[i]; }
  int index(const Monomial& m) const {
    auto it = index_.find(m.key());
    return it == index_.end() ? -1 : it->second;
  }
  int product(int i, int j) const {
    if (deg_[i] + deg_[j] > D_) return -1;
    if (!table_.empty()) return table_[static_cast<std::size_t>(i) * size() + j];
    return index_.at((mons_[i] + mons_[j]).key());
  }

private:
  void gen(std::vector<int>& cur, int pos, int left) {
    if (pos == n_ - 1) {
      cur[pos] = left;
      Monomial m = Monomial::from(std::span<const int>(cur));
      mons_.push_back(m);
      deg_.push_back(m.degree());
      cur[pos] = 0;
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[pos] = v;
      gen(cur, pos + 1, left - v);
    }
    cur[pos] = 0;
  }

  int n_, D_;
  std::vector<Monomial> mons_;
  std::vector<int> deg_;
  std::unordered_map<std::uint64_t, int> index_;
  std::vector<int> table_;
};

struct DenseContext {
  const MonomialBasis& basis;
  std::vector<char> keep;

  DenseContext(const VarLayout& vars, const Truncation& t) : basis(MonomialBasis::get(vars.dim(), t.total)) {
    keep.resize(basis.size());
    for (int i = 0; i < basis.size(); ++i) keep[i] = t.keeps(basis.at(i), vars) ? 1 : 0;
  }

  std::vector<double> zero() const { return std::vector<double>(basis.size(), 0.0); }

  std::vector<double> one() const {
    auto v = zero();
    v[0] = 1.0;
    return v;
  }

  std::vector<double> multiply(const std::vector<double>& a, const std::vector<double>& b) const {
    auto out = zero();
    std::vector<int> nb;
    for (int j = 0; j < basis.size(); ++j)
      if (b[j] != 0.0) nb.push_back(j);
    for (int i = 0; i < basis.size(); ++i) {
      if (a[i] == 0.0) continue;
      for (int j : nb) {
        int k = basis.product(i, j);
        if (k >= 0 && keep[k]) out[k] += a[i] * b[j];
      }
    }
    return out;
  }

  int min_degree(const std::vector<double>& a) const {
    for (int i = 0; i < basis.size(); ++i)
      if (a[i] != 0.0) return basis.degree(i);
    return INT_MAX / 4;
  }

  // component `comp` of p as a dense vector (p's variables must be the context variables)
  std::vector<double> from_jet(const JetPoly& p, int comp) const {
    auto v = zero();
    for (const auto& [m, c] : p.terms()) {
      int k = basis.index(m);
      if (k >= 0 && keep[k]) v[k] += c(comp);
    }
    return v;
  }
};

}  // namespace detail

// outer o (inner_1, ..., inner_k), each inner a scalar jet or all given as one map.
inline JetPoly jet_compose(const JetPoly& outer, const std::vector<JetPoly>& inner, const Truncation& t) {
  if (static_cast<int>(inner.size()) != outer.nvars())
    fail(ErrorKind::invalid_argument, "composition arity mismatch: outer has " + std::to_string(outer.nvars()) +
                                          " variables, inner has " + std::to_string(inner.size()) + " components");
  if (inner.empty()) {
    // constant outer
    JetPoly out(VarLayout(), outer.target(), t.total);
    for (const auto& [m, c] : outer.terms())
      if (m.degree() == 0) out.add_term(m, c);
    return out;
  }
  const VarLayout& vars = inner[0].vars();
  for (const auto& g : inner) {
    if (!(g.vars() == vars) || g.target_dim() != 1) fail(ErrorKind::invalid_argument, "inner jets must be scalar over common variables");
  }
  detail::DenseContext ctx(vars, t);
  const int k = outer.nvars();
  std::vector<std::vector<double>> g(k);
  std::vector<int> gmin(k);
  for (int i = 0; i < k; ++i) {
    g[i] = ctx.from_jet(inner[i], 0);
    gmin[i] = ctx.min_degree(g[i]);
  }
  const int td = outer.target_dim();
  std::vector<std::vector<double>> acc(td, ctx.zero());
  std::map<Monomial, std::vector<double>, GradedLex> powers;
  powers.emplace(Monomial{}, ctx.one());
  for (const auto& [m, c] : outer.terms()) {
    long low = 0;
    for (int i = 0; i < k; ++i) low += static_cast<long>(m.e[i]) * gmin[i];
    if (low > t.total) continue;
    // build powers along a chain of predecessors, lowest degree first
    std::vector<Monomial> chain;
    Monomial cur = m;
    while (!powers.count(cur)) {
      chain.push_back(cur);
      int last = k - 1;
      while (cur.e[last] == 0) --last;
      cur.e[last] -= 1;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      Monomial prev = *it;
      int last = k - 1;
      while (prev.e[last] == 0) --last;
      prev.e[last] -= 1;
      powers.emplace(*it, ctx.multiply(powers.at(prev), g[last]));
    }
    const auto& pw = powers.at(m);
    for (int r = 0; r < td; ++r) {
      double cr = c(r);
      if (cr == 0.0) continue;
      auto& a = acc[r];
      for (int j = 0; j < ctx.basis.size(); ++j) a[j] += cr * pw[j];
    }
  }
  JetPoly out(vars, outer.target(), t.total);
  for (int j = 0; j < ctx.basis.size(); ++j) {
    Vector c(td);
    bool nz = false;
    for (int r = 0; r < td; ++r) {
      c(r) = acc[r][j];
      nz = nz || c(r) != 0.0;
    }
    if (nz) out.set_term(ctx.basis.at(j), c);
  }
  return out;
}

inline std::vector<JetPoly> components(const JetPoly& map) {
  std::vector<JetPoly> out;
  for (int i = 0; i < map.target_dim(); ++i) out.push_back(map.component(i));
  return out;
}

inline JetPoly jet_compose(const JetPoly& outer, const JetPoly& inner_map, const Truncation& t) {
  return jet_compose(outer, components(inner_map), t);
}

inline JetPoly jet_compose(const JetPoly& outer, const JetPoly& inner_map, int max_order) {
  return jet_compose(outer, inner_map, Truncation::order(max_order));
}

// Product of a vector-valued jet with a scalar jet.
inline JetPoly jet_scale(const JetPoly& p, const JetPoly& s, const Truncation& t) {
  if (s.target_dim() != 1 || !(s.vars() == p.vars())) fail(ErrorKind::invalid_argument, "scalar factor shape mismatch");
  JetPoly out(p.vars(), p.target(), t.total);
  for (const auto& [ma, ca] : p.terms())
    for (const auto& [mb, cb] : s.terms()) {
      Monomial m = ma + mb;
      if (t.keeps(m, p.vars())) out.add_term(m, Vector(cb(0) * ca));
    }
  return out;
}

inline JetPoly jet_derivative(const JetPoly& p, int var) {
  if (var < 0 || var >= p.nvars()) fail(ErrorKind::invalid_argument, "derivative variable out of range");
  JetPoly out(p.vars(), p.target(), p.max_order());
  for (const auto& [m, c] : p.terms()) {
    if (m.e[var] == 0) continue;
    Monomial d = m;
    d.e[var] -= 1;
    out.add_term(d, Vector(m.e[var] * c));
  }
  return out;
}

inline Matrix jet_jacobian(const JetPoly& p, const Vector& x) {
  Matrix jac(p.target_dim(), p.nvars());
  for (int i = 0; i < p.nvars(); ++i) jac.col(i) = jet_derivative(p, i).evaluate(x);
  return jac;
}

// Linear part as a matrix (target x vars).
inline Matrix linear_part(const JetPoly& p) {
  Matrix m = Matrix::Zero(p.target_dim(), p.nvars());
  for (int i = 0; i < p.nvars(); ++i) m.col(i) = p.coeff(Monomial::unit(i));
  return m;
}

enum class Group { s, c, u, su, block };

// Zeroes target components outside the group.
inline JetPoly jet_project(const JetPoly& p, Group g, int block = -1) {
  const VarLayout& t = p.target();
  std::vector<double> mask(t.dim(), 0.0);
  for (int i = 0; i < t.dim(); ++i) {
    Role r = t.role_of(i);
    bool in = false;
    switch (g) {
      case Group::s: in = r == Role::stable; break;
      case Group::c: in = r == Role::center; break;
      case Group::u: in = r == Role::unstable; break;
      case Group::su: in = r != Role::center; break;
      case Group::block: {
        auto hb = t.hyperbolic_blocks();
        if (block < 0 || block >= static_cast<int>(hb.size())) fail(ErrorKind::invalid_argument, "unknown hyperbolic block");
        in = t.block_of(i) == hb[block];
        break;
      }
    }
    mask[i] = in ? 1.0 : 0.0;
  }
  JetPoly out(p.vars(), p.target(), p.max_order());
  for (const auto& [m, c] : p.terms()) {
    Vector v = c;
    for (int i = 0; i < t.dim(); ++i) v(i) *= mask[i];
    if (v.cwiseAbs().maxCoeff() > 0) out.set_term(m, v);
  }
  return out;
}

inline Group group_from_string(const std::string& s) {
  if (s == "s") return Group::s;
  if (s == "c") return Group::c;
  if (s == "u") return Group::u;
  if (s == "su") return Group::su;
  fail(ErrorKind::invalid_argument, "unknown axis group '" + s + "'");
}

// Inverse of a near-identity map Id + h by the iteration g <- Id - h o g.
inline JetPoly near_identity_inverse(const JetPoly& map, const Truncation& t) {
  const VarLayout& l = map.vars();
  JetPoly id = JetPoly::identity(l, t.total);
  JetPoly h = map.truncated(t);
  h -= id;
  JetPoly g = id;
  for (int it = 0; it <= t.total + 1; ++it) {
    JetPoly next = id;
    next -= jet_compose(h, g, t);
    g = std::move(next);
  }
  return g.prune();
}

// --- serialization ---------------------------------------------------------------------------

inline nlohmann::json layout_to_json(const VarLayout& l) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : l.blocks()) j.push_back({{"role", to_string(b.role)}, {"dim", b.dim}});
  return j;
}

inline VarLayout layout_from_json(const nlohmann::json& j) {
  std::vector<Block> b;
  for (const auto& e : j) b.push_back({role_from_string(e.at("role").get<std::string>()), e.at("dim").get<int>()});
  return VarLayout(std::move(b));
}

// Terms as {alpha: hyperbolic exponents, beta: center exponents, coeff}.
inline nlohmann::json jet_to_json(const JetPoly& p) {
  nlohmann::json terms = nlohmann::json::array();
  auto hv = p.vars().hyperbolic_vars();
  auto cv = p.vars().center_vars();
  for (const auto& [m, c] : p.terms()) {
    std::vector<int> a, b;
    for (int i : hv) a.push_back(m.e[i]);
    for (int i : cv) b.push_back(m.e[i]);
    terms.push_back({{"alpha", a}, {"beta", b}, {"coeff", std::vector<double>(c.data(), c.data() + c.size())}});
  }
  return {{"vars", layout_to_json(p.vars())},
          {"target", layout_to_json(p.target())},
          {"max_order", p.max_order()},
          {"terms", terms}};
}

inline Monomial monomial_from_split(const VarLayout& l, const std::vector<int>& alpha, const std::vector<int>& beta) {
  auto hv = l.hyperbolic_vars();
  auto cv = l.center_vars();
  if (alpha.size() != hv.size() || beta.size() != cv.size()) fail(ErrorKind::invalid_argument, "alpha/beta lengths do not match the layout");
  std::vector<int> e(l.dim(), 0);
  for (std::size_t i = 0; i < hv.size(); ++i) e[hv[i]] = alpha[i];
  for (std::size_t i = 0; i < cv.size(); ++i) e[cv[i]] = beta[i];
  return Monomial::from(std::span<const int>(e));
}

inline JetPoly jet_from_json(const nlohmann::json& j) {
  VarLayout vars = layout_from_json(j.at("vars"));
  VarLayout target = j.contains("target") ? layout_from_json(j.at("target")) : vars;
  JetPoly p(vars, target, j.at("max_order").get<int>());
  for (const auto& t : j.at("terms")) {
    auto coeff = t.at("coeff").get<std::vector<double>>();
    if (static_cast<int>(coeff.size()) != target.dim()) fail(ErrorKind::invalid_argument, "coefficient length does not match the target");
    p.add_term(monomial_from_split(vars, t.at("alpha").get<std::vector<int>>(), t.value("beta", std::vector<int>{})),
               Eigen::Map<const Vector>(coeff.data(), coeff.size()));
  }
  return p;
}

// Jets indexed by time on [lo, hi].
struct TimeJetSeq {
  int lo = 0, hi = -1;
  std::vector<JetPoly> jets;

  TimeJetSeq() = default;
  TimeJetSeq(int lo_, int hi_, const JetPoly& proto) : lo(lo_), hi(hi_), jets(std::max(0, hi_ - lo_ + 1), proto) {}

  int size() const { return hi - lo + 1; }
  bool contains(int n) const { return n >= lo && n <= hi; }
  JetPoly& at(int n) {
    if (!contains(n)) fail(ErrorKind::out_of_window, "jet index " + std::to_string(n) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return jets[n - lo];
  }
  const JetPoly& at(int n) const { return const_cast<TimeJetSeq*>(this)->at(n); }
};

}  // namespace ntnf
