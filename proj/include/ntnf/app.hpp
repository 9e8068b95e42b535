#pragma once

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntnf/families.hpp"
#include "ntnf/pipeline.hpp"
#include "ntnf/resonance.hpp"
#include "ntnf/spectral.hpp"

namespace ntnf {

using json = nlohmann::json;

inline constexpr const char* kToolName = "ntnf";
inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::string system;  // cocycle family id or "demo"
  json params = json::object();
  std::uint64_t seed = 0;
  int window = 32;

  double gamma_min = 0, gamma_max = 0;  // 0: derived from the cocycle bounds
  int samples = 64;
  int refine = 10;
  int section = 16;
  double threshold = 1e-4;
  std::optional<json> intervals;  // explicit spectrum {center, hyperbolic}

  int N = 3, N0 = 2, J = 2;
  double tol = 1e-10;

  std::optional<json> layout;
  std::optional<json> nonlinearity;
  std::optional<json> homotopy;

  std::string out = ".";
  bool csv = false;
  bool force = false;

  json echo() const {
    json j;
    j["system"] = system;
    j["params"] = params;
    j["seed"] = seed;
    j["window"] = window;
    j["spectrum"] = {{"gamma_min", gamma_min}, {"gamma_max", gamma_max}, {"samples", samples},
                     {"refine", refine},       {"section", section},     {"threshold", threshold}};
    j["orders"] = {{"N", N}, {"N0", N0}, {"J", J}};
    j["tol"] = tol;
    if (intervals) j["intervals"] = *intervals;
    if (layout) j["layout"] = *layout;
    if (nonlinearity) j["nonlinearity"] = *nonlinearity;
    if (homotopy) j["homotopy"] = *homotopy;
    j["output"] = {{"dir", out}, {"csv", csv}, {"force", force}};
    return j;
  }
};

namespace detail {

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> k = {"system", "params", "seed",   "window",       "spectrum", "intervals",
                                          "orders", "tol",    "layout", "nonlinearity", "homotopy", "output"};
  return k;
}

inline void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::parse, "'" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::invalid_argument, "unknown key '" + it.key() + "' in '" + where + "'");
  }
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::parse, "key '" + key + "' has the wrong type");
  }
}

inline const std::vector<std::string>& demo_keys() {
  static const std::vector<std::string> k = {"ds", "dc", "du", "stable", "unstable", "delta", "wobble", "degree"};
  return k;
}

}  // namespace detail

// Range checks; throws ErrorKind::range naming the key.
inline void validate(const RunConfig& c) {
  auto range = [](bool ok, const std::string& key, const std::string& rule) {
    if (!ok) fail(ErrorKind::range, "'" + key + "' out of range: " + rule);
  };
  range(c.window >= 1 && c.window <= 100000, "window", "1 <= window <= 100000");
  range(c.samples >= 4 && c.samples <= 100000, "samples", "4 <= samples <= 100000");
  range(c.refine >= 0 && c.refine <= 60, "refine", "0 <= refine <= 60");
  range(c.section >= 2 && c.section <= 4096, "section", "2 <= section <= 4096");
  range(c.threshold > 0 && c.threshold < 1, "threshold", "0 < threshold < 1");
  range(c.gamma_min >= 0, "gamma_min", "gamma_min >= 0");
  range(c.gamma_max >= 0, "gamma_max", "gamma_max >= 0");
  range(c.gamma_min == 0 || c.gamma_max == 0 || c.gamma_max > c.gamma_min, "gamma_max", "gamma_max > gamma_min");
  range(c.N >= 2 && c.N <= 20, "N", "2 <= N <= 20");
  range(c.N0 >= 1 && c.N0 <= 8, "N0", "1 <= N0 <= 8");
  range(c.J >= c.N0 && c.J <= 20, "J", "N0 <= J <= 20");
  range(c.tol > 0 && c.tol < 1, "tol", "0 < tol < 1");
  if (c.system.empty()) fail(ErrorKind::invalid_argument, "'system' is required");
  if (c.system == "demo") {
    for (auto it = c.params.begin(); it != c.params.end(); ++it)
      if (std::find(detail::demo_keys().begin(), detail::demo_keys().end(), it.key()) == detail::demo_keys().end())
        fail(ErrorKind::invalid_argument, "unknown parameter '" + it.key() + "' for system demo");
  } else {
    const auto& names = family_names();
    if (std::find(names.begin(), names.end(), c.system) == names.end())
      fail(ErrorKind::invalid_argument, "unknown system '" + c.system + "'");
    builtin_family(c.system, c.params, c.seed, 1);  // rejects unknown or malformed parameters
  }
}

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::parse, "configuration must be a JSON object");
  RunConfig c;
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!detail::config_keys().count(it.key())) extra[it.key()] = it.value();
  if (j.contains("system")) c.system = detail::get_as<std::string>(j["system"], "system");
  if (j.contains("params")) {
    if (!j["params"].is_object()) fail(ErrorKind::parse, "'params' must be an object");
    c.params = j["params"];
    if (!extra.empty()) fail(ErrorKind::invalid_argument, "unknown key '" + extra.begin().key() + "'");
  } else {
    // family parameters may sit at the top level; anything the family does not know is rejected by name
    c.params = extra;
  }
  if (j.contains("seed")) {
    auto s = detail::get_as<std::int64_t>(j["seed"], "seed");
    if (s < 0) fail(ErrorKind::range, "'seed' out of range: seed >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("window")) c.window = detail::get_as<int>(j["window"], "window");
  if (j.contains("spectrum")) {
    const json& s = j["spectrum"];
    detail::only_keys(s, {"gamma_min", "gamma_max", "samples", "refine", "section", "threshold"}, "spectrum");
    if (s.contains("gamma_min")) c.gamma_min = detail::get_as<double>(s["gamma_min"], "gamma_min");
    if (s.contains("gamma_max")) c.gamma_max = detail::get_as<double>(s["gamma_max"], "gamma_max");
    if (s.contains("samples")) c.samples = detail::get_as<int>(s["samples"], "samples");
    if (s.contains("refine")) c.refine = detail::get_as<int>(s["refine"], "refine");
    if (s.contains("section")) c.section = detail::get_as<int>(s["section"], "section");
    if (s.contains("threshold")) c.threshold = detail::get_as<double>(s["threshold"], "threshold");
  }
  bool j_given = false;
  if (j.contains("orders")) {
    const json& o = j["orders"];
    detail::only_keys(o, {"N", "N0", "J"}, "orders");
    if (o.contains("N")) c.N = detail::get_as<int>(o["N"], "N");
    if (o.contains("N0")) c.N0 = detail::get_as<int>(o["N0"], "N0");
    if (o.contains("J")) {
      c.J = detail::get_as<int>(o["J"], "J");
      j_given = true;
    }
  }
  if (!j_given) c.J = c.N0;
  if (j.contains("tol")) c.tol = detail::get_as<double>(j["tol"], "tol");
  if (j.contains("intervals")) {
    detail::only_keys(j["intervals"], {"center", "hyperbolic"}, "intervals");
    c.intervals = j["intervals"];
  }
  if (j.contains("layout")) c.layout = j["layout"];
  if (j.contains("nonlinearity")) c.nonlinearity = j["nonlinearity"];
  if (j.contains("homotopy")) {
    detail::only_keys(j["homotopy"], {"g0", "r1", "points", "tau", "tol", "flow"}, "homotopy");
    c.homotopy = j["homotopy"];
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    detail::only_keys(o, {"dir", "csv", "force"}, "output");
    if (o.contains("dir")) c.out = detail::get_as<std::string>(o["dir"], "dir");
    if (o.contains("csv")) c.csv = detail::get_as<bool>(o["csv"], "csv");
    if (o.contains("force")) c.force = detail::get_as<bool>(o["force"], "force");
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, std::string("configuration is not valid JSON: ") + e.what());
  }
  RunConfig c = config_from_json(j);
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_argument, "cannot open '" + path + "': " + std::strerror(errno));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// --- system construction -------------------------------------------------------------------------

inline CocycleSpec build_cocycle(const RunConfig& c) {
  if (c.system == "demo") fail(ErrorKind::invalid_argument, "the demo system is nonlinear; use build_system");
  return builtin_family(c.system, c.params, c.seed, c.window);
}

inline DemoSystemOptions demo_options(const RunConfig& c) {
  DemoSystemOptions o;
  const json& p = c.params;
  o.ds = p.value("ds", o.ds);
  o.dc = p.value("dc", o.dc);
  o.du = p.value("du", o.du);
  o.stable = p.value("stable", o.stable);
  o.unstable = p.value("unstable", o.unstable);
  o.delta = p.value("delta", o.delta);
  o.wobble = p.value("wobble", o.wobble);
  o.degree = p.value("degree", o.degree);
  o.window = c.window;
  o.seed = static_cast<unsigned>(c.seed);
  return o;
}

inline NonlinearSystem build_system(const RunConfig& c) {
  if (c.system == "demo") return demo_system(demo_options(c));
  CocycleSpec a = build_cocycle(c);
  JetPoly f;
  if (c.nonlinearity) {
    f = jet_from_json(*c.nonlinearity);
  } else {
    if (!c.layout) fail(ErrorKind::invalid_argument, "a nonlinear command needs 'layout' or 'nonlinearity'");
    VarLayout l = layout_from_json(*c.layout);
    f = JetPoly(l, l, std::max(2, c.N0 + 1));
  }
  if (c.layout && !(layout_from_json(*c.layout) == f.vars())) fail(ErrorKind::invalid_argument, "'layout' does not match the nonlinearity");
  if (f.vars().dim() != a.dim()) fail(ErrorKind::invalid_argument, "layout dimension does not match the cocycle");
  return NonlinearSystem(a, constant_sequence(-c.window, c.window, f));
}

inline SpectrumOptions spectrum_options(const RunConfig& c) {
  SpectrumOptions o;
  o.gamma_lo = c.gamma_min;
  o.gamma_hi = c.gamma_max;
  o.samples = c.samples;
  o.refine_iters = c.refine;
  o.test.window = c.section;
  o.test.threshold = c.threshold;
  return o;
}

inline SpectrumResult spectrum_from_intervals(const json& j) {
  SpectrumResult s;
  auto iv = [](const json& e) {
    if (!e.is_array() || e.size() != 2) fail(ErrorKind::parse, "intervals must be [lo, hi] pairs");
    Interval r{e[0].get<double>(), e[1].get<double>()};
    if (!(r.lo > 0 && r.hi >= r.lo)) fail(ErrorKind::range, "interval endpoints must satisfy 0 < lo <= hi");
    return r;
  };
  if (j.contains("center")) {
    s.center = iv(j["center"]);
    s.has_center = true;
    s.center_dim = 1;
  }
  if (j.contains("hyperbolic"))
    for (const auto& e : j["hyperbolic"]) {
      s.hyperbolic.push_back(iv(e));
      s.hyperbolic_dims.push_back(1);
    }
  std::sort(s.hyperbolic.begin(), s.hyperbolic.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& h : s.hyperbolic)
    if (h.hi < s.center.lo) ++s.ell;
  s.dim = s.center_dim + s.r();
  return s;
}

inline SpectrumResult spectrum_from_blocks(const NonlinearSystem& sys) {
  const VarLayout& l = sys.layout();
  const auto& bs = *sys.block_spectra();
  SpectrumResult s;
  s.dim = l.dim();
  for (int b = 0; b < l.num_blocks(); ++b) {
    if (l.block(b).role == Role::center) {
      s.center = bs[b];
      s.has_center = true;
      s.center_dim = l.block(b).dim;
    } else {
      s.hyperbolic.push_back(bs[b]);
      s.hyperbolic_dims.push_back(l.block(b).dim);
    }
  }
  for (const auto& h : s.hyperbolic)
    if (h.hi < s.center.lo) ++s.ell;
  return s;
}

// --- reports -------------------------------------------------------------------------------------

struct Report {
  json meta = json::object();
  json config_echo;  // null when absent
  json results = json::object();
  json diagnostics = json::object();
  json warnings = json::array();
  std::vector<std::vector<std::string>> csv;  // header row first
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline Report make_report(const RunConfig* cfg, const std::string& command) {
  Report r;
  r.meta = {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"timestamp", utc_timestamp()}};
  if (cfg) {
    r.config_echo = cfg->echo();
    r.meta["config_hash"] = fnv1a_hex(r.config_echo.dump());
  }
  return r;
}

// Keys come out sorted (std::map-backed objects); empty sections are omitted.
inline json report_json(const Report& r) {
  json j;
  j["schema"] = 1;
  j["meta"] = r.meta;
  if (!r.config_echo.is_null()) j["config-echo"] = r.config_echo;
  if (!r.results.empty()) j["results"] = r.results;
  if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::invalid_argument, "cannot write '" + path + "': " + std::strerror(errno));
  out << text;
  if (!out) fail(ErrorKind::invalid_argument, "cannot write '" + path + "': " + std::strerror(errno));
}

inline void write_report(const Report& r, const std::string& path) { write_text(path, report_json(r).dump(2) + "\n"); }

inline std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

inline std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

inline json multi_index_json(const MultiIndex& q) { return json(std::vector<int>(q.begin(), q.end())); }

inline std::string witness_of(const MultiIndex& q) {
  std::string w = "q=(";
  for (std::size_t i = 0; i < q.size(); ++i) w += (i ? "," : "") + std::to_string(q[i]);
  return w + ")";
}

// --- commands ------------------------------------------------------------------------------------

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> c = {"spectrum", "resonance", "center-manifold", "normal-form", "verify-conjugacy"};
  return c;
}

struct CommandOutcome {
  int status = 0;  // 0 ok, 2 mathematical failure
  Report report;
};

namespace detail {

inline void spectrum_results(const SpectrumResult& s, Report& r) {
  json ivs = json::array(), kinds = json::array(), dims = json::array();
  std::size_t h = 0;
  for (const auto& iv : s.all_intervals()) {
    ivs.push_back(interval_json(iv));
    bool is_center = s.has_center && iv.lo == s.center.lo && iv.hi == s.center.hi;
    if (is_center) {
      kinds.push_back("center");
      dims.push_back(s.center_dim);
    } else {
      kinds.push_back(iv.hi < 1.0 ? "stable" : "unstable");
      dims.push_back(h < s.hyperbolic_dims.size() ? s.hyperbolic_dims[h] : 0);
      ++h;
    }
  }
  r.results["intervals"] = ivs;
  r.results["kinds"] = kinds;
  r.results["dims"] = dims;
  r.results["has_center"] = s.has_center;
  for (const auto& w : s.warnings) r.warnings.push_back(w);
}

inline void resonance_results(const NonResonanceReport& nr, Report& r) {
  json v = json::array(), w = json::array();
  for (const auto& x : nr.violations) {
    v.push_back({{"condition", x.condition},
                 {"q", multi_index_json(x.q)},
                 {"target", x.target},
                 {"target_interval", interval_json(x.target_interval)},
                 {"product", interval_json(x.product)},
                 {"log_overlap", x.overlap}});
    w.push_back(x.condition + " " + witness_of(x.q) + (x.target < 0 ? " vs center" : " vs interval " + std::to_string(x.target)));
  }
  r.results["N"] = nr.N;
  r.results["pass"] = nr.pass();
  r.results["nr1_pass"] = nr.nr1_pass;
  r.results["nr2_pass"] = nr.nr2_pass;
  r.results["gap_pass"] = nr.gap_pass;
  r.results["violations"] = v;
  r.results["witnesses"] = w;
  r.diagnostics["branches_checked"] = nr.branches.size();
  r.diagnostics["varsigma"] = nr.varsigma;
  r.diagnostics["gap"] = {{"left_defined", nr.gap.left_defined},
                          {"left_margin", nr.gap.left_margin},
                          {"right_defined", nr.gap.right_defined},
                          {"right_margin", nr.gap.right_margin}};
  for (const auto& n : nr.gap.notes) r.warnings.push_back(n);
}

inline json graded_json(const GradedDiagnostics& d) {
  json cls = json::array();
  for (const auto& c : d.classes)
    cls.push_back({{"target_block", c.target_block},
                   {"j", c.j},
                   {"q", c.q},
                   {"growth", interval_json(c.growth)},
                   {"direction", c.direction},
                   {"rate", c.rate},
                   {"truncation", c.truncation}});
  return {{"band", d.band}, {"max_rate", d.max_rate}, {"residual", d.residual}, {"classes", cls}};
}

inline NonlinearSystem prepared_system(const RunConfig& c) {
  NonlinearSystem sys = build_system(c);
  SpectrumOptions o = spectrum_options(c);
  ensure_block_spectra(sys, o);
  return sys;
}

inline CommandOutcome run_spectrum(const RunConfig& c) {
  CommandOutcome out{0, make_report(&c, "spectrum")};
  CocycleSpec a = c.system == "demo" ? build_system(c).linear() : build_cocycle(c);
  SpectrumResult s = compute_spectrum(a, spectrum_options(c));
  spectrum_results(s, out.report);
  out.report.diagnostics["samples"] = s.samples.size();
  out.report.diagnostics["section"] = c.section;
  out.report.diagnostics["threshold"] = c.threshold;
  // sup |A_n| and sup |A_n^{-1}| are only known over the window
  out.report.diagnostics["bounds"] = {{"window", {-a.window(), a.window()}}, {"sup_norm", a.sup_norm()}, {"sup_inv_norm", a.sup_inv_norm()}};
  out.report.csv.push_back({"gamma", "dichotomy", "margin", "margin_2w", "margin_limit", "rank"});
  for (const auto& v : s.samples)
    out.report.csv.push_back(
        {num(v.gamma), v.has_dichotomy ? "1" : "0", num(v.margin), num(v.margin_2w), num(v.margin_limit), std::to_string(v.rank)});
  return out;
}

inline CommandOutcome run_resonance(const RunConfig& c) {
  CommandOutcome out{0, make_report(&c, "resonance")};
  SpectrumResult s;
  if (c.intervals) {
    s = spectrum_from_intervals(*c.intervals);
    out.report.diagnostics["spectrum_source"] = "config";
  } else if (c.system == "demo" || c.layout || c.nonlinearity) {
    s = spectrum_from_blocks(prepared_system(c));
    out.report.diagnostics["spectrum_source"] = "blocks";
  } else {
    s = compute_spectrum(build_cocycle(c), spectrum_options(c));
    out.report.diagnostics["spectrum_source"] = "computed";
  }
  spectrum_results(s, out.report);
  if (!s.has_center) fail(ErrorKind::invalid_argument, "the non-resonance check needs a center interval");
  NonResonanceReport nr = check_non_resonance(s, c.N);
  resonance_results(nr, out.report);
  if (!nr.pass() || !nr.gap_pass) out.status = 2;
  return out;
}

inline CommandOutcome run_center_manifold(const RunConfig& c) {
  CommandOutcome out{0, make_report(&c, "center-manifold")};
  NonlinearSystem sys = prepared_system(c);
  const int order = std::max(2, c.N0 + 1);
  CenterManifoldJets cm = center_manifold_jets(sys, block_trichotomy(sys), order, c.tol);
  auto inv = verify_center_invariance(sys, cm, {1e-3, 1e-2, 1e-1});
  auto& r = out.report.results;
  r["order"] = order;
  r["residual"] = cm.residual;
  r["coefficient_bound"] = cm.bound;
  r["band"] = cm.band;
  r["trusted"] = {cm.trusted_lo(), cm.trusted_hi()};
  if (cm.phi.contains(0)) r["phi_0"] = jet_to_json(cm.phi.at(0));
  json rows = json::array();
  out.report.csv.push_back({"radius", "residual"});
  for (const auto& row : inv.rows) {
    rows.push_back({{"radius", row.radius}, {"residual", row.residual}});
    out.report.csv.push_back({num(row.radius), num(row.residual)});
  }
  r["invariance"] = rows;
  out.report.diagnostics["solver"] = graded_json(cm.diag);
  out.report.diagnostics["orbit"] = {{"gamma1", inv.gamma1},
                                     {"gamma2", inv.gamma2},
                                     {"forward_constant", inv.forward_constant},
                                     {"backward_constant", inv.backward_constant},
                                     {"horizon", inv.horizon}};
  return out;
}

inline bool precheck_resonance(const RunConfig& c, const NonlinearSystem& sys, Report& rep) {
  const VarLayout& l = sys.layout();
  if (l.center_block() < 0 || l.hyperbolic_vars().empty()) return true;
  NonResonanceReport nr = check_non_resonance(spectrum_from_blocks(sys), c.N);
  json pre;
  Report tmp;
  resonance_results(nr, tmp);
  rep.results["precheck"] = tmp.results;
  for (const auto& w : tmp.warnings) rep.warnings.push_back(w);
  if (!nr.pass() || !nr.gap_pass) {
    if (!c.force) return false;
    rep.warnings.push_back("non-resonance or gap check failed; continuing because of --force");
  }
  return true;
}

inline void takens_results(const TakensResult& t, const RunConfig& c, Report& rep) {
  auto& r = rep.results;
  const auto& cr = t.conjugacy;
  json table = json::array();
  rep.csv.push_back({"radius", "residual"});
  double validity = 0;
  for (std::size_t i = 0; i < cr.radii.size(); ++i) {
    table.push_back({{"radius", cr.radii[i]}, {"residual", cr.residuals[i]}});
    rep.csv.push_back({num(cr.radii[i]), num(cr.residuals[i])});
    if (cr.residuals[i] <= c.tol) validity = std::max(validity, cr.radii[i]);
  }
  r["conjugacy"] = {{"table", table}, {"slope", cr.slope}, {"exact", cr.exact}, {"n_range", {cr.n_lo, cr.n_hi}}};
  r["validity_radius"] = validity;
  r["max_residual"] = *std::max_element(cr.residuals.begin(), cr.residuals.end());
  r["structure_defect"] = t.form.structure_defect;
  r["trusted"] = {t.form.trusted_lo, t.form.trusted_hi};
  r["N0"] = t.form.order;
  r["psi_inverse_defect"] = t.psi.inverse_defect();
  r["suggested_N"] = 3 * c.N0 + 1;
  if (t.form.w.contains(0)) {
    r["w_0"] = jet_to_json(t.form.w.at(0));
    r["a_su_0"] = jet_to_json(t.form.a_su.at(0));
  }
  json st = json::array();
  for (const auto& s : t.stages)
    st.push_back({{"stage", s.stage}, {"p", s.p}, {"band", s.band}, {"max_rate", s.max_rate}, {"residual", s.residual}, {"eliminated", s.eliminated}});
  rep.diagnostics["stages"] = st;
}

inline CommandOutcome run_normal_form(const RunConfig& c, const std::string& name) {
  CommandOutcome out{0, make_report(&c, name)};
  NonlinearSystem sys = prepared_system(c);
  if (!precheck_resonance(c, sys, out.report)) {
    out.status = 2;
    return out;
  }
  TakensResult t = takens_normal_form(sys, c.N0, c.J, c.tol);
  takens_results(t, c, out.report);
  return out;
}

inline CommandOutcome run_homotopy(const RunConfig& c) {
  CommandOutcome out{0, make_report(&c, "verify-conjugacy")};
  const json& h = *c.homotopy;
  if (!h.contains("g0") || !h.contains("r1")) fail(ErrorKind::invalid_argument, "'homotopy' needs 'g0' and 'r1'");
  JetPoly g0 = jet_from_json(h["g0"]), r1 = jet_from_json(h["r1"]);
  double tau = h.value("tau", 0.0), tol = h.value("tol", 1e-15);
  bool flow = h.value("flow", true);
  std::vector<std::vector<double>> pts = h.value("points", std::vector<std::vector<double>>{});
  if (pts.empty()) fail(ErrorKind::invalid_argument, "'homotopy.points' must list at least one point");
  json rows = json::array();
  out.report.csv.push_back({"point", "h", "residual", "terms", "flow_defect"});
  double worst = 0, worst_flow = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vector x = Eigen::Map<const Vector>(pts[i].data(), pts[i].size());
    HomotopyResult res = homotopy_series_conjugacy(g0, r1, x, tau, tol, flow);
    std::vector<double> hv(res.h.data(), res.h.data() + res.h.size());
    json row = {{"point", pts[i]}, {"h", hv}, {"residual", res.residual}, {"terms", res.terms}};
    if (flow) {
      row["H"] = std::vector<double>(res.H.data(), res.H.data() + res.H.size());
      row["flow_defect"] = res.flow_defect;
    }
    rows.push_back(row);
    worst = std::max(worst, res.residual);
    worst_flow = std::max(worst_flow, res.flow_defect);
    out.report.csv.push_back({num(x.norm()), num(res.h.norm()), num(res.residual), std::to_string(res.terms), num(res.flow_defect)});
  }
  out.report.results["homotopy"] = {{"rows", rows}, {"max_residual", worst}, {"max_flow_defect", worst_flow}, {"tau", tau}};
  return out;
}

}  // namespace detail

// Runs one command; mathematical failures come back as status 2 with the witness in the report,
// usage errors are thrown.
inline CommandOutcome run_command(const std::string& cmd, const RunConfig& c) {
  if (std::find(command_names().begin(), command_names().end(), cmd) == command_names().end())
    fail(ErrorKind::invalid_argument, "unknown command '" + cmd + "'");
  try {
    if (cmd == "spectrum") return detail::run_spectrum(c);
    if (cmd == "resonance") return detail::run_resonance(c);
    if (cmd == "center-manifold") return detail::run_center_manifold(c);
    if (cmd == "normal-form") return detail::run_normal_form(c, cmd);
    if (c.homotopy) return detail::run_homotopy(c);
    return detail::run_normal_form(c, cmd);
  } catch (const Error& e) {
    if (!e.mathematical()) throw;
    CommandOutcome out{2, make_report(&c, cmd)};
    out.report.results["failure"] = {{"kind", to_string(e.kind())}, {"message", e.what()}, {"witness", e.witness()}};
    return out;
  }
}

}  // namespace ntnf
