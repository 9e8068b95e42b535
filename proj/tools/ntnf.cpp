#include <iostream>

#include <CLI11.hpp>

#include "ntnf/app.hpp"

int main(int argc, char** argv) {
  using namespace ntnf;
  CLI::App app{"Nonautonomous Takens normal forms: spectra, resonance checks, center manifolds and conjugacies"};
  std::string command, config, out;
  std::optional<int> window, samples, order_n, order_n0, jets_j;
  std::optional<double> gamma_min, gamma_max, tol;
  std::optional<std::int64_t> seed;
  bool force = false, csv = false;

  app.add_option("command", command, "spectrum | resonance | center-manifold | normal-form | verify-conjugacy")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config, "JSON configuration file")->required();
  app.add_option("--out", out, "output directory for the report and CSV files");
  app.add_option("--window", window, "window half-width W");
  app.add_option("--gamma-min", gamma_min, "lower end of the growth-rate sweep");
  app.add_option("--gamma-max", gamma_max, "upper end of the growth-rate sweep");
  app.add_option("--samples", samples, "number of growth rates sampled");
  app.add_option("--order-N", order_n, "non-resonance order N");
  app.add_option("--order-N0", order_n0, "normal-form order N0");
  app.add_option("--jets-J", jets_j, "center jet order J");
  app.add_option("--tol", tol, "solver tolerance");
  app.add_option("--seed", seed, "random seed for seeded families");
  app.add_flag("--force", force, "run normal-form even when the non-resonance check fails");
  app.add_flag("--csv", csv, "also write a CSV table next to the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::ifstream in(config);
    if (!in) fail(ErrorKind::invalid_argument, "cannot open '" + config + "': " + std::strerror(errno));
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
      j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      fail(ErrorKind::parse, std::string("configuration is not valid JSON: ") + e.what());
    }
    RunConfig cfg = config_from_json(j);
    if (window) cfg.window = *window;
    if (gamma_min) cfg.gamma_min = *gamma_min;
    if (gamma_max) cfg.gamma_max = *gamma_max;
    if (samples) cfg.samples = *samples;
    if (order_n) cfg.N = *order_n;
    if (order_n0) {
      cfg.N0 = *order_n0;
      if (!jets_j && !(j.contains("orders") && j["orders"].contains("J"))) cfg.J = cfg.N0;
    }
    if (jets_j) cfg.J = *jets_j;
    if (tol) cfg.tol = *tol;
    if (seed) {
      if (*seed < 0) fail(ErrorKind::range, "'seed' out of range: seed >= 0");
      cfg.seed = static_cast<std::uint64_t>(*seed);
    }
    if (!out.empty()) cfg.out = out;
    cfg.force = cfg.force || force;
    cfg.csv = cfg.csv || csv;
    validate(cfg);

    CommandOutcome res = run_command(command, cfg);
    const std::string base = (std::filesystem::path(cfg.out) / command).string();
    write_report(res.report, base + ".json");
    if (cfg.csv && !res.report.csv.empty()) write_text(base + ".csv", csv_text(res.report.csv));
    std::cout << command << ": " << (res.status == 0 ? "ok" : "mathematical precondition failed") << " (report " << base << ".json)\n";
    if (res.status != 0) {
      const auto& r = res.report.results;
      if (r.contains("failure")) std::cerr << r["failure"]["message"].get<std::string>() << "\n";
      if (r.contains("witnesses"))
        for (const auto& w : r["witnesses"]) std::cerr << "witness: " << w.get<std::string>() << "\n";
      if (r.contains("precheck"))
        for (const auto& w : r["precheck"]["witnesses"]) std::cerr << "witness: " << w.get<std::string>() << "\n";
    }
    return res.status;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.mathematical() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
