#include "vmm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace vmm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CertifyStatus parse_status(const std::string& s) {
  for (auto c : {CertifyStatus::certified, CertifyStatus::failed, CertifyStatus::inconclusive})
    if (to_string(c) == s) return c;
  throw DomainError("unknown certification status '" + s + "'");
}

CriticalPointRecord full_record(const ViscousFamily& fam, double sigma, const Point& x,
                                const ToleranceProfile& tol) {
  auto r = make_record(fam, sigma, x);
  r.morse = morse_data(x, fam, sigma, tol);
  return r;
}

// Refine from x0; on failure keep the best iterate and say so.
CriticalPointRecord refine_or_best(const Point& x0, const Problem& p, double sigma, const RunConfig& cfg,
                                   std::vector<std::string>& notes) {
  RefineOptions ro;
  ro.tol_grad = cfg.tol.grad;
  ro.budget = cfg.budget.refine;
  ro.norm_bound = p.norm_bound;
  ro.tol = cfg.tol;
  try {
    return refine(x0, p.family, sigma, ro);
  } catch (const RefineError& e) {
    notes.push_back(std::string("refine: ") + e.what());
    return full_record(p.family, sigma, e.best(), cfg.tol);
  }
}

int grid_index(const WidthCurve& c, double sigma) {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.sigmas[i] == sigma) return static_cast<int>(i);
  return -1;
}

void localize(SigmaResult& out, const Problem& p, const WidthCurve& curve, int k, const RunConfig& cfg) {
  LocateOptions lo;
  lo.budget = cfg.budget.locate;
  std::optional<NearCriticalCertificate> best;
  for (int step = 1; step <= 2 && k + step < static_cast<int>(curve.size()); ++step) {
    const double sk = curve.sigmas[k + step];
    try {
      out.near_critical = locate_near_critical(curve.tightened[k + step], p.family, out.sigma, sk, curve, lo);
      out.sigma_k = sk;
      return;
    } catch (const LocateError& e) {
      out.notes.push_back(std::string("locate at sigma_k=") + std::to_string(sk) + ": " + e.what());
      if (!best || e.best().grad_norm < best->grad_norm) best = e.best();
    } catch (const PreconditionError& e) {
      out.notes.push_back(std::string("locate at sigma_k=") + std::to_string(sk) + ": " + e.what());
    }
  }
  if (best) {
    out.near_critical = best;
    out.sigma_k = best->sigma_k;
  }
}

Point start_point(const SigmaResult& r, const WidthCurve& curve, int k) {
  if (r.near_critical) return r.near_critical->point;
  return curve.tightened[k].frames[curve.argmax_frames[k]];
}

void degenerate_branch(SigmaResult& out, const Problem& p, const RunConfig& cfg) {
  const std::vector<Point> K{out.record.point};
  std::vector<CriticalPointRecord> tail;
  CertifyOptions co;
  co.gap_tol = cfg.tol.gap;
  co.seed = cfg.seed;
  for (std::size_t e = 0; e < cfg.perturb.epsilons.size(); ++e) {
    PerturbationRun pr;
    pr.epsilon = cfg.perturb.epsilons[e];
    NondegeneracyCertificate cert;
    for (int t = 0; t < cfg.budget.resample; ++t) {
      ++pr.tries;
      pr.spec = sample_tilt(K, cfg.perturb.delta, pr.epsilon, cfg.seed + 1000 * (e + 1) + t);
      cert = certify_nondegenerate(perturb_family(p.family, pr.spec), out.sigma, K, cfg.perturb.delta, co);
      if (cert.certified()) break;
    }
    pr.status = cert.status;
    pr.records = cert.records;
    if (!cert.certified())
      out.notes.push_back("perturbation eps=" + std::to_string(pr.epsilon) + ": no certified tilt after " +
                          std::to_string(pr.tries) + " draws");
    const CriticalPointRecord* closest = nullptr;
    for (const auto& r : pr.records)
      if (!closest || (r.point - K[0]).norm() < (closest->point - K[0]).norm()) closest = &r;
    if (closest) tail.push_back(*closest);
    out.perturbations.push_back(std::move(pr));
  }
  if (!tail.empty()) out.semicontinuity_ok = index_semicontinuity_check(tail, out.record);
}

bool needs_surgery(const CriticalPointRecord& r, const RunConfig& cfg) {
  if (!r.morse) return false;
  if (cfg.kind == FamilyKind::admissible) return r.morse->index > cfg.d;
  if (cfg.kind == FamilyKind::dual) return r.morse->index < cfg.d;
  return false;
}

void surgery_loop(SigmaResult& out, const Problem& p, Sweepout sw, const RunConfig& cfg) {
  ChartOptions chart_opts;
  chart_opts.max_radius = cfg.chart_max_radius;
  chart_opts.tol = cfg.tol;
  TightenOptions to;
  for (int round = 0; round < cfg.budget.surgery && needs_surgery(out.record, cfg); ++round) {
    SurgeryReport rep;
    try {
      const auto chart = build_chart(out.record, p.family, out.sigma, chart_opts);
      if (cfg.kind == FamilyKind::admissible) {
        SurgeryOptions so;
        so.seed = cfg.seed + round;
        sw = surgery_admissible(sw, chart, p.family, out.sigma, &rep, so);
        sw = tighten(sw, p.family, out.sigma, cfg.budget.retighten, to).sweepout;
      } else {
        sw = surgery_dual(sw, chart, p.family, out.sigma, &rep);
      }
    } catch (const Error& e) {
      out.notes.push_back("surgery round " + std::to_string(round) + ": " + e.what());
      return;
    }
    out.surgeries.push_back(rep);
    const auto [sup, arg] = sup_over(sw, p.family, out.sigma);
    (void)sup;
    auto next = refine_or_best(sw.frames[arg], p, out.sigma, cfg, out.notes);
    if ((next.point - out.record.point).norm() < 1e-6) {
      out.notes.push_back("surgery round " + std::to_string(round) + ": top frame returns to the same critical point");
      return;
    }
    out.superseded.push_back(std::move(out.record));
    out.record = std::move(next);
  }
  if (needs_surgery(out.record, cfg))
    out.notes.push_back("surgery budget exhausted with index " + std::to_string(out.record.morse->index));
}

}  // namespace

bool reverify(const CriticalPointRecord& record, const Problem& problem, const ToleranceProfile& tol) {
  if (record.point.size() != problem.family.dim()) return false;
  const auto again = full_record(problem.family, record.sigma, record.point, tol);
  const double eps = tol.reverify;
  auto close = [eps](double a, double b) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= eps * std::max(1.0, std::abs(a));
  };
  if (!close(again.value, record.value) || !close(again.grad_norm, record.grad_norm) ||
      !close(again.entropy_residual, record.entropy_residual))
    return false;
  if (record.morse && (again.morse->index != record.morse->index || again.morse->nullity != record.morse->nullity))
    return false;
  return true;
}

RunRecord run(const RunConfig& config) {
  config.validate();
  RunRecord rec;
  rec.config = config;
  const auto t_all = Clock::now();

  auto t0 = Clock::now();
  const Problem problem = [&] {
    try {
      return make_problem(config.problem, config.frames);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("problem.key: ") + e.what());
    }
  }();
  rec.timings["setup"] = seconds_since(t0);

  t0 = Clock::now();
  const auto grid = config.sigma_grid();
  rec.boundary_value = boundary_value(problem.seed, problem.family, 0.0);
  rec.curve = estimate_width_curve(problem.seed, problem.family, grid, config.budget.tighten, true);
  rec.nontrivial = check_nontrivial(rec.curve, rec.boundary_value, config.nontrivial_margin);
  rec.timings["width"] = seconds_since(t0);
  rec.checks["nontrivial"] = rec.nontrivial;
  if (!rec.nontrivial)
    throw PreconditionError("trivial family: beta(0) = " + std::to_string(rec.curve.betas.front()) +
                            " does not exceed the boundary value " + std::to_string(rec.boundary_value) +
                            " by the margin");

  t0 = Clock::now();
  rec.certificates = entropy_certificates(rec.curve, config.window_steps);
  std::vector<double> selected;
  for (const auto& c : rec.certificates)
    if (c.accepted()) selected.push_back(c.sigma);
  std::sort(selected.begin(), selected.end());
  if (config.max_sigmas > 0 && static_cast<int>(selected.size()) > config.max_sigmas)
    selected.resize(config.max_sigmas);
  rec.timings["entropy"] = seconds_since(t0);
  rec.checks["entropy_selected"] = !selected.empty();
  if (selected.empty()) rec.notes.push_back("no grid sigma passed the entropy test");

  t0 = Clock::now();
  for (double sigma : selected) {
    SigmaResult out;
    out.sigma = sigma;
    const int k = grid_index(rec.curve, sigma);
    localize(out, problem, rec.curve, k, config);
    out.record = refine_or_best(start_point(out, rec.curve, k), problem, sigma, config, out.notes);

    // The nullity band alone misses points whose whole Hessian is small, so a gap below the
    // certification threshold also counts as degenerate.
    if (out.record.morse && (out.record.morse->degenerate() || out.record.morse->gap < config.tol.gap)) {
      if (config.perturb.policy == "perturb")
        degenerate_branch(out, problem, config);
      else
        out.notes.push_back("degenerate critical point (nullity " + std::to_string(out.record.morse->nullity) +
                            "); reported without perturbation");
    }
    if (needs_surgery(out.record, config)) surgery_loop(out, problem, rec.curve.tightened[k], config);

    out.grad_ok = out.record.grad_norm <= config.tol.grad;
    out.entropy_ok = out.record.in_entropy_set();
    out.index_bound_ok = out.record.morse && certify_index_bound(out.record, config.d, config.kind);
    rec.results.push_back(std::move(out));
  }
  rec.timings["critical"] = seconds_since(t0);

  t0 = Clock::now();
  bool grad = true, bound = true, ent = true, again = true;
  for (const auto& r : rec.results) {
    grad = grad && r.grad_ok;
    bound = bound && r.index_bound_ok;
    ent = ent && r.entropy_ok;
    again = again && reverify(r.record, problem, config.tol);
  }
  rec.checks["grad"] = grad;
  rec.checks["index_bound"] = bound;
  rec.checks["entropy_membership"] = ent;
  rec.checks["reverify"] = again;
  rec.timings["reverify"] = seconds_since(t0);
  rec.timings["total"] = seconds_since(t_all);
  rec.complete = !selected.empty() && grad && bound;
  if (!bound) rec.notes.push_back("incomplete: a record violates the index bound after the surgery loop");
  return rec;
}

// ---- serialization

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  for (const auto& [k, _] : config_keys()) j[k] = get_config_value(c, k);
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  for (const auto& [k, v] : j.items()) set_config_value(c, k, v.get<std::string>());
}

void to_json(nlohmann::json& j, const PerturbationRun& p) {
  j = {{"epsilon", p.epsilon}, {"tries", p.tries}, {"status", to_string(p.status)},
       {"spec", p.spec},       {"records", p.records}};
}

void from_json(const nlohmann::json& j, PerturbationRun& p) {
  p.epsilon = j.at("epsilon").get<double>();
  p.tries = j.at("tries").get<int>();
  p.status = parse_status(j.at("status").get<std::string>());
  p.spec = j.at("spec").get<PerturbationSpec>();
  p.records = j.at("records").get<std::vector<CriticalPointRecord>>();
}

void to_json(nlohmann::json& j, const SigmaResult& r) {
  j = {{"sigma", r.sigma},
       {"sigma_k", r.sigma_k},
       {"record", r.record},
       {"superseded", r.superseded},
       {"surgeries", r.surgeries},
       {"perturbations", r.perturbations},
       {"grad_ok", r.grad_ok},
       {"entropy_ok", r.entropy_ok},
       {"index_bound_ok", r.index_bound_ok},
       {"notes", r.notes}};
  j["near_critical"] = r.near_critical ? nlohmann::json(*r.near_critical) : nlohmann::json(nullptr);
  j["semicontinuity_ok"] = r.semicontinuity_ok ? nlohmann::json(*r.semicontinuity_ok) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SigmaResult& r) {
  r.sigma = j.at("sigma").get<double>();
  r.sigma_k = j.at("sigma_k").get<double>();
  r.record = j.at("record").get<CriticalPointRecord>();
  r.superseded = j.at("superseded").get<std::vector<CriticalPointRecord>>();
  r.surgeries = j.at("surgeries").get<std::vector<SurgeryReport>>();
  r.perturbations = j.at("perturbations").get<std::vector<PerturbationRun>>();
  r.grad_ok = j.at("grad_ok").get<bool>();
  r.entropy_ok = j.at("entropy_ok").get<bool>();
  r.index_bound_ok = j.at("index_bound_ok").get<bool>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  const auto& nc = j.at("near_critical");
  r.near_critical = nc.is_null() ? std::nullopt : std::optional(nc.get<NearCriticalCertificate>());
  const auto& sc = j.at("semicontinuity_ok");
  r.semicontinuity_ok = sc.is_null() ? std::nullopt : std::optional(sc.get<bool>());
}

nlohmann::json deterministic_json(const RunRecord& r) {
  return {{"config", r.config},   {"boundary_value", r.boundary_value},
          {"nontrivial", r.nontrivial}, {"width", r.curve},
          {"certificates", r.certificates}, {"results", r.results},
          {"checks", r.checks},   {"complete", r.complete},
          {"notes", r.notes}};
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  j = deterministic_json(r);
  j["timings"] = r.timings;
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  r.config = j.at("config").get<RunConfig>();
  r.boundary_value = j.at("boundary_value").get<double>();
  r.nontrivial = j.at("nontrivial").get<bool>();
  r.curve = j.at("width").get<WidthCurve>();
  r.certificates = j.at("certificates").get<std::vector<EntropyCertificate>>();
  r.results = j.at("results").get<std::vector<SigmaResult>>();
  r.checks = j.at("checks").get<std::map<std::string, bool>>();
  r.complete = j.at("complete").get<bool>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.timings = j.value("timings", std::map<std::string, double>{});
}

// ---- files

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os.precision(17);
  return os;
}

}  // namespace

void emit(const RunRecord& record, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "plotdata", ec);
  if (ec) throw Error("cannot create " + (root / "plotdata").string() + ": " + ec.message());

  open_out(root / "run.json") << nlohmann::json(record).dump(2) << '\n';

  {
    auto os = open_out(root / "width.csv");
    write_width_csv(os, record.curve);
  }
  {
    auto os = open_out(root / "critical_points.csv");
    const Eigen::Index n = record.results.empty() ? 0 : record.results.front().record.point.size();
    os << "sigma,value,base_value,reg_value,grad_norm,index,nullity,gap,entropy_residual";
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
    os << '\n';
    for (const auto& res : record.results) {
      const auto& r = res.record;
      os << r.sigma << ',' << r.value << ',' << r.base_value << ',' << r.reg_value << ',' << r.grad_norm << ',';
      if (r.morse) os << r.morse->index << ',' << r.morse->nullity << ',' << r.morse->gap;
      else os << ",,";
      os << ',' << r.entropy_residual;
      for (Eigen::Index i = 0; i < r.point.size(); ++i) os << ',' << r.point[i];
      os << '\n';
    }
  }
  {
    auto os = open_out(root / "plotdata" / "beta_entropy.csv");
    os << "sigma,beta,raw_beta,beta_prime_est,bound,slack\n";
    for (std::size_t i = 0; i < record.curve.size(); ++i) {
      const double s = record.curve.sigmas[i];
      os << s << ',' << record.curve.betas[i] << ',' << record.curve.raw_betas[i];
      const auto it = std::find_if(record.certificates.begin(), record.certificates.end(),
                                   [s](const EntropyCertificate& c) { return c.sigma == s; });
      if (it != record.certificates.end()) os << ',' << it->beta_prime_est << ',' << it->bound << ',' << it->slack;
      else os << ",,,";
      os << '\n';
    }
  }
  {
    auto os = open_out(root / "plotdata" / "spectra.csv");
    os << "sigma,rank,eigenvalue\n";
    for (const auto& res : record.results) {
      if (!res.record.morse) continue;
      const auto& ev = res.record.morse->eigenvalues;
      for (Eigen::Index i = 0; i < ev.size(); ++i) os << res.sigma << ',' << i << ',' << ev[i] << '\n';
    }
  }
}

RunRecord load_run(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  nlohmann::json j;
  try {
    is >> j;
    return j.get<RunRecord>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace vmm
