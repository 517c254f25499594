#include "vmm/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "vmm/acceptance.hpp"
#include "vmm/pipeline.hpp"

namespace vmm {

namespace {

struct Options {
  int verbosity = 1;
  // width
  std::string problem = "double_well";
  std::string grid = "0.005:0.06:12";
  int frames = 33;
  int budget = 200;
  bool zero = false;
  // solve / sweep-sigma
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  // certify
  std::string run_json;
  // demo
  std::string demo = "double_well";
  // selftest
  std::string filter;
  std::vector<std::string> inject;
};

double parse_double(const std::string& what, const std::string& s) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(what + ": '" + s + "' is not a number");
  return x;
}

// lo:hi:n, linear spacing, both ends included.
std::vector<double> parse_grid(const std::string& spec, bool zero) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError("--grid: expected lo:hi:n, got '" + spec + "'");
  const double lo = parse_double("--grid lo", parts[0]), hi = parse_double("--grid hi", parts[1]);
  const double nd = parse_double("--grid n", parts[2]);
  if (!(lo > 0.0 && hi > lo)) throw ConfigError("--grid: need 0 < lo < hi");
  if (!(nd >= 2 && nd == std::floor(nd) && nd <= 100000)) throw ConfigError("--grid: n must be an integer >= 2");
  const int n = static_cast<int>(nd);
  std::vector<double> g;
  if (zero) g.push_back(0.0);
  for (int i = 0; i < n; ++i) g.push_back(i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
  return g;
}

RunConfig build_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& kv : o.overrides) apply_override(c, kv);
  if (!o.out_dir.empty()) c.output = o.out_dir;
  c.validate();
  return c;
}

void print_results(std::ostream& out, const RunRecord& rec) {
  out << "problem " << rec.config.problem << ", beta(0) = " << std::setprecision(10) << rec.curve.betas.front()
      << ", boundary " << rec.boundary_value << "\n";
  out << std::left << std::setw(10) << "sigma" << std::setw(14) << "value" << std::setw(12) << "grad" << std::setw(7)
      << "index" << std::setw(8) << "nullity" << std::setw(13) << "entropy_res" << "verdicts\n";
  for (const auto& r : rec.results) {
    const auto& x = r.record;
    out << std::setprecision(4) << std::setw(10) << r.sigma << std::setprecision(8) << std::setw(14) << x.value
        << std::setprecision(2) << std::setw(12) << x.grad_norm << std::setw(7)
        << (x.morse ? std::to_string(x.morse->index) : "-") << std::setw(8)
        << (x.morse ? std::to_string(x.morse->nullity) : "-") << std::setprecision(3) << std::setw(13)
        << x.entropy_residual << (r.grad_ok ? "grad " : "GRAD ") << (r.index_bound_ok ? "index " : "INDEX ")
        << (r.entropy_ok ? "entropy" : "ENTROPY");
    if (!r.surgeries.empty()) out << ", " << r.surgeries.size() << " surgery";
    if (!r.perturbations.empty()) out << ", " << r.perturbations.size() << " tilts";
    out << "\n";
  }
  for (const auto& [k, v] : rec.checks) out << "  " << k << ": " << (v ? "ok" : "FAILED") << "\n";
  out << (rec.complete ? "complete" : "incomplete") << "\n";
}

void print_notes(std::ostream& out, const RunRecord& rec) {
  for (const auto& n : rec.notes) out << "note: " << n << "\n";
  for (const auto& r : rec.results)
    for (const auto& n : r.notes) out << "note (sigma " << r.sigma << "): " << n << "\n";
}

int cmd_width(const Options& o, std::ostream& out) {
  const auto grid = parse_grid(o.grid, o.zero);
  if (o.budget < 1) throw ConfigError("--budget must be positive");
  Problem p = [&] {
    try {
      return make_problem(o.problem, o.frames);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }();
  const auto curve = estimate_width_curve(p.seed, p.family, grid, o.budget);
  const std::string dir = o.out_dir.empty() ? "out" : o.out_dir;
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / "width.csv";
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_width_csv(os, curve);
  if (o.verbosity > 0) {
    for (std::size_t i = 0; i < curve.size(); ++i)
      out << std::setprecision(6) << std::setw(10) << curve.sigmas[i] << "  " << std::setprecision(12)
          << curve.betas[i] << "\n";
    out << "wrote " << path.string() << " (" << curve.size() << " rows)\n";
  }
  return kExitOk;
}

int cmd_solve(const Options& o, std::ostream& out) {
  const auto cfg = build_config(o);
  const auto rec = run(cfg);
  emit(rec, cfg.output);
  if (o.verbosity > 0) print_results(out, rec);
  if (o.verbosity > 1) print_notes(out, rec);
  out << "wrote " << (std::filesystem::path(cfg.output) / "run.json").string() << "\n";
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto cfg = build_config(o);
  const auto p = make_problem(cfg.problem, cfg.frames);
  const auto curve = estimate_width_curve(p.seed, p.family, cfg.sigma_grid(), cfg.budget.tighten);
  const auto certs = entropy_certificates(curve, cfg.window_steps);
  RunRecord rec;
  rec.config = cfg;
  rec.curve = curve;
  rec.certificates = certs;
  rec.boundary_value = boundary_value(p.seed, p.family, 0.0);
  rec.nontrivial = check_nontrivial(curve, rec.boundary_value, cfg.nontrivial_margin);
  rec.complete = false;
  rec.notes.push_back("sweep-sigma: width and entropy selection only");
  emit(rec, cfg.output);
  out << std::left << std::setw(10) << "sigma" << std::setw(16) << "beta" << std::setw(14) << "beta'"
      << std::setw(14) << "bound" << "selected\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << std::setprecision(4) << std::setw(10) << curve.sigmas[i] << std::setprecision(10) << std::setw(16)
        << curve.betas[i];
    const auto it = std::find_if(certs.begin(), certs.end(),
                                 [&](const EntropyCertificate& c) { return c.sigma == curve.sigmas[i]; });
    if (it != certs.end())
      out << std::setprecision(4) << std::setw(14) << it->beta_prime_est << std::setw(14) << it->bound
          << (it->accepted() ? "yes" : "no");
    out << "\n";
  }
  out << "nontrivial: " << (rec.nontrivial ? "yes" : "no") << "\n";
  return kExitOk;
}

int cmd_certify(const Options& o, std::ostream& out) {
  if (!std::filesystem::exists(o.run_json)) throw ConfigError("cannot open run record '" + o.run_json + "'");
  const auto rec = load_run(o.run_json);
  const auto p = make_problem(rec.config.problem, rec.config.frames);
  bool ok = !rec.results.empty();
  for (const auto& r : rec.results) {
    const bool again = reverify(r.record, p, rec.config.tol);
    const bool grad = r.record.grad_norm <= rec.config.tol.grad;
    const bool bound = r.record.morse && certify_index_bound(r.record, rec.config.d, rec.config.kind);
    const bool ent = r.record.in_entropy_set();
    ok = ok && again && grad && bound && ent;
    out << "sigma " << std::setprecision(6) << r.sigma << ": reverify " << (again ? "ok" : "FAILED") << ", grad "
        << (grad ? "ok" : "FAILED") << ", index bound " << (bound ? "ok" : "FAILED") << ", entropy "
        << (ent ? "ok" : "FAILED") << "\n";
  }
  if (rec.results.empty()) out << "no critical-point records\n";
  out << (ok ? "certified" : "NOT certified") << "\n";
  return ok ? kExitOk : kExitCheck;
}

RunConfig demo_config(const std::string& name) {
  RunConfig c;
  if (name == "double_well") {
  } else if (name == "surgery") {
    apply_override(c, "problem.key=planted_saddle");
  } else if (name == "degenerate") {
    apply_override(c, "problem.key=monkey_saddle:confine=0");
    apply_override(c, "tolerance.gap=1e-3");
    apply_override(c, "entropy.max_sigmas=3");
  } else if (name == "geodesic") {
    apply_override(c, "problem.key=ellipsoid_loop:a=1,c=0.5,N=64");
    apply_override(c, "perturb.policy=report");
    apply_override(c, "entropy.max_sigmas=1");
  } else {
    throw ConfigError("unknown demo '" + name + "'; valid demos: double_well, surgery, degenerate, geodesic");
  }
  c.output = "out/demo_" + name;
  return c;
}

int cmd_demo(const Options& o, std::ostream& out) {
  RunConfig c = demo_config(o.demo);
  for (const auto& kv : o.overrides) apply_override(c, kv);
  if (!o.out_dir.empty()) c.output = o.out_dir;
  c.validate();
  const auto rec = run(c);
  emit(rec, c.output);
  print_results(out, rec);
  if (o.verbosity > 1) print_notes(out, rec);
  if (o.demo == "geodesic" && !rec.results.empty()) {
    const auto p = make_problem(c.problem, c.frames);
    out << "loop length / 2 pi = " << std::setprecision(8)
        << ambient_length(*p.chart, rec.results[0].record.point) / (2.0 * std::numbers::pi) << "\n";
  }
  out << "wrote " << (std::filesystem::path(c.output) / "run.json").string() << "\n";
  return kExitOk;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  AcceptanceOptions ao;
  ao.filter = o.filter;
  for (const auto& kv : o.inject) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--inject: expected NAME=VALUE, got '" + kv + "'");
    ao.tolerances[kv.substr(0, eq)] = parse_double("--inject " + kv.substr(0, eq), kv.substr(eq + 1));
  }
  const auto names = acceptance_names();
  if (!o.filter.empty() &&
      std::none_of(names.begin(), names.end(), [&](const std::string& n) { return n.find(o.filter) != std::string::npos; })) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("--filter '" + o.filter + "' matches no check; checks: " + valid);
  }
  const auto rows = run_acceptance(ao, o.verbosity > 0 ? &out : nullptr);
  int pass = 0;
  for (const auto& r : rows) pass += r.pass;
  out << pass << "/" << rows.size() << " checks passed\n";
  for (const auto& r : rows)
    if (!r.pass) out << "failed: " << r.name << (r.known_gap ? " (known gap)" : "") << "\n";
  return all_pass(rows) ? kExitOk : kExitCheck;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Viscosity min-max: width curves, entropy selection and index-bounded critical points", "vmm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  int verbose = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "More output (notes from every stage)");
  app.add_flag("-q,--quiet", quiet, "Less output");

  auto* width = app.add_subcommand("width", "Estimate the width curve beta(sigma) and write width.csv");
  width->add_option("--problem", o.problem, "Problem key, e.g. double_well or torus_loop:R=2,r=0.5")->capture_default_str();
  width->add_option("--grid", o.grid, "Sigma grid lo:hi:n (linear, both ends included)")->capture_default_str();
  width->add_option("--frames", o.frames, "Frames of the seed sweepout")->capture_default_str();
  width->add_option("--budget", o.budget, "Tightening iterations per grid point")->capture_default_str();
  width->add_flag("--zero", o.zero, "Prepend sigma = 0 to the grid");
  width->add_option("-o,--out", o.out_dir, "Output directory (default: out)");

  auto* solve = app.add_subcommand("solve", "Run the full pipeline and write run.json and CSV files");
  solve->add_option("-c,--config", o.config, "Config file (sections and key = value lines)");
  solve->add_option("overrides", o.overrides, "Config overrides as dotted.key=value");
  solve->add_option("-o,--out", o.out_dir, "Output directory (overrides run.output)");

  auto* sweep = app.add_subcommand("sweep-sigma", "Width curve and entropy selection over the config grid, no localization");
  sweep->add_option("-c,--config", o.config, "Config file");
  sweep->add_option("overrides", o.overrides, "Config overrides as dotted.key=value");
  sweep->add_option("-o,--out", o.out_dir, "Output directory (overrides run.output)");

  auto* certify = app.add_subcommand("certify", "Re-verify a run.json against the problem registry; exit 3 on failure");
  certify->add_option("run", o.run_json, "Path to run.json")->required();

  auto* demo = app.add_subcommand("demo", "Run a packaged example: double_well, surgery, degenerate or geodesic");
  demo->add_option("name", o.demo, "Demo name")->capture_default_str();
  demo->add_option("overrides", o.overrides, "Config overrides as dotted.key=value");
  demo->add_option("-o,--out", o.out_dir, "Output directory (default: out/demo_<name>)");

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance checks and print one row per check");
  selftest->add_option("--filter", o.filter, "Run only checks whose name contains this string");
  selftest->add_option("--inject", o.inject, "Override a pinned tolerance, NAME=VALUE (fault injection)");

  for (auto* sub : {width, solve, sweep, certify, demo, selftest})
    sub->footer("Global options (before or after the subcommand): -v,--verbose  -q,--quiet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }
  o.verbosity = quiet ? 0 : 1 + verbose;

  try {
    if (*width) return cmd_width(o, out);
    if (*solve) return cmd_solve(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*certify) return cmd_certify(o, out);
    if (*demo) return cmd_demo(o, out);
    if (*selftest) return cmd_selftest(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace vmm
