#include "vmm/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "vmm/pipeline.hpp"

namespace vmm {

namespace {

using Clock = std::chrono::steady_clock;
using Tol = std::map<std::string, double>;

std::string num(double x, int digits = 3) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RunConfig cfg_of(std::initializer_list<std::string> overrides) {
  RunConfig c;
  for (const auto& o : overrides) apply_override(c, o);
  return c;
}

Point origin(Eigen::Index n) { return Vector::Zero(n); }

// ---- 1. mountain-pass exactness

AcceptanceRow mountain_pass(const Tol& t) {
  AcceptanceRow row;
  row.expected = "beta(0) = 0 / 1, point = origin, index 1 = d, < 10 s each";
  row.tolerance = "beta " + num(t.at("mountain_pass.beta")) + ", point " + num(t.at("mountain_pass.point"));
  row.pass = true;
  std::ostringstream act;
  std::string sep;
  for (const auto& [key, level] : std::vector<std::pair<std::string, double>>{{"quadratic_saddle", 0.0}, {"double_well", 1.0}}) {
    const auto t0 = Clock::now();
    const auto rec = run(cfg_of({"problem.key=" + key, "entropy.max_sigmas=1"}));
    const double secs = since(t0);
    const double dbeta = std::abs(rec.curve.betas.front() - level);
    double dx = 0.0;
    bool index_ok = !rec.results.empty();
    for (const auto& r : rec.results) {
      dx = std::max(dx, (r.record.point - origin(r.record.point.size())).cwiseAbs().maxCoeff());
      index_ok = index_ok && r.record.morse && r.record.morse->index == 1 && rec.config.d == 1;
    }
    const bool ok = dbeta <= t.at("mountain_pass.beta") && dx <= t.at("mountain_pass.point") && index_ok &&
                    secs < t.at("mountain_pass.seconds");
    row.pass = row.pass && ok;
    act << sep << key << ": |dbeta| " << num(dbeta) << ", |dx| " << num(dx) << ", index "
        << (rec.results.empty() || !rec.results[0].record.morse ? -1 : rec.results[0].record.morse->index) << ", "
        << num(secs, 2) << " s";
    sep = "; ";
  }
  row.actual = act.str();
  return row;
}

// ---- 2. index bound via surgery, confirmed by grid enumeration

struct GridCritical {
  Point x;
  int index = 0;
};

// Discrete local minima of |grad F|^2 on a square grid, classified by the Hessian there.
std::vector<GridCritical> enumerate_critical(const ViscousFamily& fam, double sigma, double half, double step) {
  const int n = static_cast<int>(std::lround(2 * half / step)) + 1;
  std::vector<float> g2(static_cast<std::size_t>(n) * n);
  Point x(2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      x << -half + i * step, -half + j * step;
      g2[static_cast<std::size_t>(i) * n + j] = static_cast<float>(fam.gradient(sigma, x).squaredNorm());
    }
  std::vector<GridCritical> out;
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const float v = g2[static_cast<std::size_t>(i) * n + j];
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          if ((di || dj) && g2[static_cast<std::size_t>(i + di) * n + j + dj] < v) {
            minimum = false;
            break;
          }
      if (!minimum || v > 1e-2) continue;
      x << -half + i * step, -half + j * step;
      const Eigen::SelfAdjointEigenSolver<Matrix> es(fam.hessian(sigma, x));
      out.push_back({x, static_cast<int>((es.eigenvalues().array() < 0.0).count())});
    }
  return out;
}

AcceptanceRow index_bound(const Tol& t) {
  AcceptanceRow row;
  row.expected = "final index <= 1, nearest grid index-1 saddle within tolerance, < 60 s";
  row.tolerance = "point " + num(t.at("index_bound.point")) + ", grid step " + num(t.at("index_bound.grid_step"));
  const auto t0 = Clock::now();
  const auto rec = run(cfg_of({"problem.key=planted_saddle", "entropy.max_sigmas=1"}));
  if (rec.results.empty() || !rec.results[0].record.morse) {
    row.actual = "no record";
    return row;
  }
  const auto& r = rec.results[0];
  const auto problem = make_problem(rec.config.problem, rec.config.frames);
  const auto found = enumerate_critical(problem.family, r.sigma, 1.25, t.at("index_bound.grid_step"));
  const double secs = since(t0);
  double nearest = 1e300;
  int hills = 0;
  for (const auto& c : found) {
    if (c.index == 1) nearest = std::min(nearest, (c.x - r.record.point).cwiseAbs().maxCoeff());
    if (c.index == 2) ++hills;
  }
  const bool surgered = !r.superseded.empty() && r.superseded.front().morse && r.superseded.front().morse->index == 2;
  row.pass = r.record.morse->index <= 1 && nearest <= t.at("index_bound.point") && surgered &&
             secs < t.at("index_bound.seconds");
  row.actual = "naive index " + std::to_string(surgered ? 2 : -1) + " -> final index " +
               std::to_string(r.record.morse->index) + " at level " + num(r.record.base_value, 6) +
               "; grid: " + std::to_string(found.size()) + " critical (" + std::to_string(hills) +
               " index-2), nearest index-1 " + num(nearest) + "; " + num(secs, 2) + " s";
  return row;
}

// ---- 3. deformation properties

Vector ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  if (n == 0) return v;
  return v * (radius * std::pow(u(rng), 1.0 / static_cast<double>(n)) / v.norm());
}

AcceptanceRow deformation(const Tol& t) {
  AcceptanceRow row;
  row.expected = "0 descent violations; cylinder boundary lands on |z-| = r1, z+ = 0";
  row.tolerance = "descent " + num(t.at("deformation.descent")) + ", landing " + num(t.at("deformation.landing"));
  struct Case {
    std::string key;
    Point x;
  };
  const std::vector<Case> cases{
      {"quadratic_saddle", Eigen::Vector2d(0.1, 0.1)},
      {"quadratic_saddle:neg=2,pos=1", Eigen::Vector3d(0.1, 0.1, 0.1)},
      {"double_well", Eigen::Vector2d(0.05, 0.05)},
      {"planted_saddle", Eigen::Vector2d(0.05, 0.05)},
      {"planted_saddle", Eigen::Vector2d(0.05, 0.65)},
  };
  const double sigma = 0.01;
  const int samples = 10000;
  std::mt19937_64 rng(2024);
  int violations = 0, landed = 0, charts = 0;
  double worst_landing = 0.0;
  for (const auto& c : cases) {
    const auto p = make_problem(c.key);
    const auto rec = refine(c.x, p.family, sigma);
    const auto chart = build_chart(rec, p.family, sigma);
    ++charts;
    const int k = chart.index();
    const Eigen::Index n = chart.dim();
    const double rho = std::min(chart.validity_radius(), 4.0 * chart.r2());
    for (int i = 0; i < samples; ++i) {
      const Vector z = ball(rng, n, rho);
      const Point x = chart.from_chart({z.head(k), z.tail(n - k)});
      if (p.family.value(sigma, deform_phi(x, chart)) > p.family.value(sigma, x) + t.at("deformation.descent"))
        ++violations;
    }
    for (int i = 0; i < samples; ++i) {
      Vector zn = ball(rng, k, 1.0);
      zn *= chart.r1() / zn.norm();
      const Point x = chart.from_chart({zn, ball(rng, n - k, chart.r2())});
      if (p.family.value(sigma, x) > chart.level() + chart.delta()) continue;
      const ChartPoint z = chart.to_chart(deform_phi(x, chart));
      worst_landing = std::max({worst_landing, std::abs(z.neg.norm() - chart.r1()), z.pos.norm()});
      ++landed;
    }
  }
  row.pass = violations == 0 && landed > 0 && worst_landing <= t.at("deformation.landing");
  row.actual = std::to_string(charts) + " charts x " + std::to_string(samples) + " points: " +
               std::to_string(violations) + " violations; " + std::to_string(landed) +
               " boundary points, worst landing error " + num(worst_landing);
  return row;
}

// ---- 4. degenerate case

AcceptanceRow degenerate(const Tol& t) {
  AcceptanceRow row;
  row.expected = "certified at eps 1e-1, 1e-2, 1e-3 within 10 draws; F~ <= F; F~ = F off N_2delta(K); "
                 "semicontinuity vs (index 0, nullity 2)";
  row.tolerance = "retries " + num(t.at("degenerate.retries")) + ", < " + num(t.at("degenerate.seconds")) + " s";
  const auto t0 = Clock::now();
  const auto p = make_problem("monkey_saddle:confine=0");
  const double sigma = 0.0, delta = 0.2;
  const std::vector<Point> K{origin(2)};
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  bool all_certified = true;
  int above = 0, changed_outside = 0, samples_in = 0, samples_out = 0;
  std::vector<CriticalPointRecord> tail;
  std::ostringstream draws;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    NondegeneracyCertificate cert;
    PerturbationSpec spec;
    int tries = 0;
    while (tries < static_cast<int>(t.at("degenerate.retries"))) {
      spec = sample_tilt(K, delta, eps, 42 + 100 * tries + static_cast<unsigned long long>(-std::log10(eps)));
      ++tries;
      cert = certify_nondegenerate(perturb_family(p.family, spec), sigma, K, delta);
      if (cert.certified()) break;
    }
    draws << eps << ":" << tries << (cert.certified() ? "" : "!") << " ";
    all_certified = all_certified && cert.certified();
    const auto tilted = perturb_family(p.family, spec);
    for (int i = 0; i < 5000; ++i) {
      Point x(2);
      x << u(rng), u(rng);
      const double f = p.family.value(sigma, x), ft = tilted.value(sigma, x);
      if (x.norm() < 2 * delta) {
        ++samples_in;
        if (ft > f) ++above;
      } else {
        ++samples_out;
        if (ft != f) ++changed_outside;
      }
    }
    const CriticalPointRecord* closest = nullptr;
    for (const auto& r : cert.records)
      if (!closest || r.point.norm() < closest->point.norm()) closest = &r;
    if (closest) tail.push_back(*closest);
  }
  CriticalPointRecord limit;
  limit.point = origin(2);
  MorseData m;
  m.eigenvalues = Vector::Zero(2);
  m.eigenvectors = Matrix::Identity(2, 2);
  m.index = 0;
  m.nullity = 2;
  limit.morse = m;
  const bool semi = tail.size() == 3 && index_semicontinuity_check(tail, limit);
  const double secs = since(t0);
  row.pass = all_certified && above == 0 && changed_outside == 0 && semi && secs < t.at("degenerate.seconds");
  std::string idx;
  for (const auto& r : tail) idx += std::to_string(r.morse->index) + " ";
  row.actual = "draws " + draws.str() + "; F~ > F at " + std::to_string(above) + "/" + std::to_string(samples_in) +
               ", F~ != F outside at " + std::to_string(changed_outside) + "/" + std::to_string(samples_out) +
               "; tail indices " + idx + "; semicontinuity " + (semi ? "ok" : "FAILED") + "; " + num(secs, 2) + " s";
  return row;
}

// ---- 5. entropy machinery

struct Synthetic {
  std::string name;
  std::function<double(double)> beta;
  std::function<double(double)> slope;  ///< derivative where smooth
  std::vector<double> jumps;
};

// Independent of the library formula on purpose.
double oracle_bound(double s) {
  const double l = std::log(1.0 / s);
  return 1.0 / (s * l * std::log(l));
}

AcceptanceRow entropy(const Tol& t) {
  AcceptanceRow row;
  row.expected = "0 classification errors; good fraction >= 1 - 2 delta_j on compliant I_j; min ratio -> 0";
  row.tolerance = "margin " + num(t.at("entropy.margin")) + " of the bound";
  const auto t0 = Clock::now();
  auto floor_step = [](double s, double w) { return std::floor(s / w + 1e-12); };
  const std::vector<Synthetic> curves{
      {"linear", [](double s) { return 10.0 * s; }, [](double) { return 10.0; }, {}},
      {"sqrt", [](double s) { return 30.0 * std::sqrt(s); }, [](double s) { return 15.0 / std::sqrt(s); }, {}},
      {"staircase", [=](double s) { return 0.05 * floor_step(s, 0.01); }, [](double) { return 0.0; },
       {0.01, 0.02, 0.03, 0.04, 0.05, 0.06}},
      {"ramp_jump", [](double s) { return 3.0 * s + (s >= 0.03 ? 0.1 : 0.0); }, [](double) { return 3.0; }, {0.03}},
      {"constant", [](double) { return 1.0; }, [](double) { return 0.0; }, {}},
  };
  const int n = 600;
  const double lo = 1e-3, hi = 0.065;
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * i / (n - 1));

  int errors = 0, classified = 0, compliant_checks = 0, fraction_fail = 0;
  const EntropySchedule schedule;
  for (const auto& c : curves) {
    WidthCurve curve;
    curve.sigmas = grid;
    for (double s : grid) curve.betas.push_back(c.beta(s));
    curve.raw_betas = curve.betas;
    curve.argmax_frames.assign(grid.size(), 0);
    const auto certs = entropy_certificates(curve, 2);
    const auto sel = select_entropy_sigmas(curve, 2);
    for (const auto& cert : certs) {
      const std::size_t k = std::lower_bound(grid.begin(), grid.end(), cert.sigma) - grid.begin();
      const double s = grid[k], s2 = grid[k + 2];
      const bool jump = std::any_of(c.jumps.begin(), c.jumps.end(), [&](double j) { return j > s && j <= s2; });
      const double bound = oracle_bound(s);
      const bool oracle_accept = !jump && c.slope(s) <= bound;
      if (!jump && std::abs(c.slope(s) - bound) <= t.at("entropy.margin") * bound) continue;
      ++classified;
      const bool selected = std::any_of(sel.begin(), sel.end(), [&](const EntropyCertificate& e) { return e.sigma == s; });
      if (selected != oracle_accept) ++errors;
    }
    for (int j = 16; j <= 20; ++j) {
      const auto [a1, a0] = schedule.interval(j);
      const bool jump_inside = std::any_of(c.jumps.begin(), c.jumps.end(), [&](double x) { return x >= a1 && x <= a0; });
      // Slopes of these curves are nonincreasing in sigma, so the left end is the worst case.
      if (jump_inside || c.slope(a1) > oracle_bound(a0)) continue;
      ++compliant_checks;
      if (good_interval_fraction(curve, schedule, j) < 1.0 - 2.0 * schedule.delta(j)) ++fraction_fail;
    }
  }

  // Summable increments against the schedule b_j: the minimum ratio decays along prefixes.
  const int count = 100000;
  const auto b = schedule.b_prefix(count);
  std::vector<double> inc(count), same(b);
  for (int k = 0; k < count; ++k) inc[k] = 1.0 / std::pow(k + schedule.J_start, 2.0);
  std::vector<double> mins;
  for (int prefix : {10, 100, 1000, 10000, 100000}) mins.push_back(liminf_ratio_check(inc, b, prefix));
  const bool decays = std::is_sorted(mins.rbegin(), mins.rend()) && mins.front() > mins.back() && mins.back() < 1e-2;
  const bool flat = liminf_ratio_check(same, b, count) == 1.0;
  const double secs = since(t0);
  row.pass = errors == 0 && classified > 0 && compliant_checks > 0 && fraction_fail == 0 && decays && flat &&
             secs < t.at("entropy.seconds");
  row.actual = std::to_string(errors) + "/" + std::to_string(classified) + " classification errors; " +
               std::to_string(fraction_fail) + "/" + std::to_string(compliant_checks) +
               " good-fraction failures; min ratio " + num(mins.front()) + " -> " + num(mins.back()) + "; " +
               num(secs, 2) + " s";
  return row;
}

// ---- 6. near-critical certificates

AcceptanceRow near_critical(const Tol& t) {
  AcceptanceRow row;
  row.expected = "grad <= delta_k and value inside the bracket for sigma 0.01, 0.02";
  row.tolerance = "exact inequalities, delta_k recomputed";
  const auto t0 = Clock::now();
  const auto p = make_problem("double_well");
  std::vector<double> grid{0.0};
  for (int i = 1; i <= 12; ++i) grid.push_back(0.005 * i);
  const auto curve = estimate_width_curve(p.seed, p.family, grid, 200, true);
  bool ok = true;
  std::ostringstream act;
  for (double sigma : {0.01, 0.02}) {
    const std::size_t k = std::min_element(grid.begin(), grid.end(),
                                           [&](double a, double b) { return std::abs(a - sigma) < std::abs(b - sigma); }) -
                          grid.begin();
    const double s = grid[k], sk = grid[k + 1];
    const auto c = locate_near_critical(curve.tightened[k + 1], p.family, s, sk, curve);
    const double bp = (curve.betas[k + 1] - curve.betas[k]) / (sk - s);
    const double dk = std::sqrt(2.0 * (bp + 2.0) * (sk - s));
    const double g = p.family.gradient(s, c.point).norm();
    const double v = p.family.value(s, c.point);
    const bool in = g <= dk && curve.betas[k] - (sk - s) <= v && v <= curve.betas[k + 1] + (sk - s);
    ok = ok && in;
    act << "sigma " << s << ": grad " << num(g) << " <= " << num(dk) << ", value " << num(v, 8) << " in ["
        << num(curve.betas[k] - (sk - s), 8) << ", " << num(curve.betas[k + 1] + (sk - s), 8) << "]; ";
  }
  const double secs = since(t0);
  row.pass = ok && secs < t.at("near_critical.seconds");
  row.actual = act.str() + num(secs, 2) + " s";
  return row;
}

// ---- 7. geodesic demo

struct LoopOutcome {
  bool have = false;
  double length = 0.0;
  int index = -1;
  int nullity = -1;
  double residual = 0.0;
  double seconds = 0.0;
};

LoopOutcome loop_demo(const std::string& key) {
  const auto t0 = Clock::now();
  const auto rec = run(cfg_of({"problem.key=" + key, "entropy.max_sigmas=1", "perturb.policy=report"}));
  LoopOutcome o;
  o.seconds = since(t0);
  if (rec.results.empty() || !rec.results[0].record.morse) return o;
  const auto& r = rec.results[0].record;
  const auto p = make_problem(rec.config.problem, rec.config.frames);
  o.have = true;
  o.length = ambient_length(*p.chart, r.point);
  o.index = r.morse->index;
  o.nullity = r.morse->nullity;
  o.residual = r.entropy_residual;
  return o;
}

AcceptanceRow geodesic(const Tol& t) {
  AcceptanceRow row;
  row.expected = "spheroid (1,1,0.5), N 64: length within 2% of 2 pi, index <= 1, entropy residual <= 0";
  row.tolerance = "length " + num(t.at("geodesic.length")) + " relative, < " + num(t.at("geodesic.seconds")) + " s";
  const double two_pi = 2.0 * std::numbers::pi;
  const double tl = t.at("geodesic.length");
  auto meets = [&](const LoopOutcome& o) {
    return o.have && std::abs(o.length - two_pi) <= tl * two_pi && o.index <= 1 && o.residual <= 0.0 &&
           o.seconds < t.at("geodesic.seconds");
  };
  const auto oblate = loop_demo("ellipsoid_loop:a=1,c=0.5,N=64");
  const auto prolate = loop_demo("ellipsoid_loop:a=1,c=2,N=64");
  auto describe = [&](const LoopOutcome& o) {
    if (!o.have) return std::string("no record");
    return "length/2pi " + num(o.length / two_pi, 6) + ", index " + std::to_string(o.index) + ", nullity " +
           std::to_string(o.nullity) + ", residual " + num(o.residual) + ", " + num(o.seconds, 3) + " s";
  };
  row.pass = meets(oblate);
  row.actual = "oblate: " + describe(oblate) + "; prolate control (1,1,2): " + describe(prolate);
  // The oblate equator has Gauss curvature a^2/c^4 = 4 and length 2 pi; its Jacobi operator
  // -f'' - 4 f has eigenvalues n^2 - 4, so the equator has index 3 and nullity 2. The width of the
  // latitude family is attained there, so no loop of length 2 pi has index <= 1.
  if (!row.pass && oblate.have && std::abs(oblate.length - two_pi) <= tl * two_pi && oblate.index > 1 &&
      meets(prolate)) {
    row.known_gap = true;
    row.reason = "oblate equator has Jacobi eigenvalues n^2 - 4 (index 3, nullity 2); the index-1 closed geodesic "
                 "of this spheroid is a meridian of length about 4.84, so length 2 pi and index <= 1 cannot hold "
                 "together; the prolate control passes";
  }
  return row;
}

// ---- 8. numerical hygiene

AcceptanceRow hygiene(const Tol& t) {
  AcceptanceRow row;
  row.expected = "gradient and Hessian FD checks on every registered functional at 100 points; Weyl on 100 "
                 "pairs; identical run.json for seed 42";
  row.tolerance = "grad " + num(t.at("hygiene.grad")) + ", hessian " + num(t.at("hygiene.hessian")) +
                  " (relative to max(1, |.|)), weyl " + num(t.at("hygiene.weyl"));
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::normal_distribution<double> g;

  std::vector<std::pair<std::string, FunctionalHandle>> handles;
  std::vector<std::pair<std::string, Point>> anchors;
  std::vector<std::string> keys = problem_names();
  keys.push_back("torus_loop:reg=alpha");
  keys.push_back("ellipsoid_loop:reg=alpha");
  std::map<std::string, Point> anchor_of;
  for (const auto& key : keys) {
    const auto p = make_problem(key);
    const Point anchor = p.nodes > 0 ? p.seed.frames[p.seed.size() / 2] : origin(p.family.dim());
    if (p.family.is_additive()) {
      handles.emplace_back(p.key + " F", p.family.base());
      handles.emplace_back(p.key + " G", *p.family.regularizer());
      anchor_of[p.key + " F"] = anchor_of[p.key + " G"] = anchor;
    } else {
      for (double s : {0.0, 0.01}) {
        const std::string label = p.key + " F_" + num(s);
        handles.emplace_back(label, p.family.at(s));
        anchor_of[label] = anchor;
      }
    }
  }
  double worst_g = 0.0, worst_h = 0.0;
  std::string worst_name;
  for (const auto& [name, h] : handles) {
    const Point& a = anchor_of[name];
    const bool loop = a.size() > 3;
    for (int i = 0; i < 100; ++i) {
      Point x = a;
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = loop ? a[k] + 0.01 * g(rng) : u(rng);
      const double eg = grad_check(h, x, 1e-6) / std::max(1.0, h.gradient(x).cwiseAbs().maxCoeff());
      const double eh = hessian_check(h, x, 1e-5) / std::max(1.0, h.hessian(x).cwiseAbs().maxCoeff());
      if (eg > worst_g || eh > worst_h) worst_name = name;
      worst_g = std::max(worst_g, eg);
      worst_h = std::max(worst_h, eh);
    }
  }

  double weyl_worst = -1e300;
  for (int i = 0; i < 100; ++i) {
    const int n = 2 + i % 9;
    Matrix A(n, n), E(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        A(r, c) = g(rng);
        E(r, c) = 1e-3 * g(rng);
      }
    A = (A + A.transpose()).eval() / 2;
    E = (E + E.transpose()).eval() / 2;
    const auto ma = morse_data_of(A), mb = morse_data_of(A + E);
    const double norm_e = Eigen::SelfAdjointEigenSolver<Matrix>(E).eigenvalues().cwiseAbs().maxCoeff();
    weyl_worst = std::max(weyl_worst, (mb.eigenvalues - ma.eigenvalues).cwiseAbs().maxCoeff() - norm_e);
  }

  const auto cfg = cfg_of({"problem.key=planted_saddle", "entropy.max_sigmas=2", "run.seed=42"});
  const bool same = deterministic_json(run(cfg)).dump() == deterministic_json(run(cfg)).dump();
  const double secs = since(t0);
  row.pass = worst_g <= t.at("hygiene.grad") && worst_h <= t.at("hygiene.hessian") &&
             weyl_worst <= t.at("hygiene.weyl") && same;
  row.actual = std::to_string(handles.size()) + " functionals: worst grad " + num(worst_g) + ", hessian " +
               num(worst_h) + " (" + worst_name + "); Weyl excess " + num(weyl_worst) + "; determinism " +
               (same ? "identical" : "DIFFERENT") + "; " + num(secs, 2) + " s";
  return row;
}

struct Check {
  const char* name;
  AcceptanceRow (*fn)(const Tol&);
};

const std::vector<Check>& checks() {
  static const std::vector<Check> c{
      {"mountain_pass", mountain_pass}, {"index_bound", index_bound},     {"deformation", deformation},
      {"degenerate", degenerate},       {"entropy", entropy},             {"near_critical", near_critical},
      {"geodesic", geodesic},           {"hygiene", hygiene},
  };
  return c;
}

}  // namespace

std::vector<std::string> acceptance_names() {
  std::vector<std::string> v;
  for (const auto& c : checks()) v.emplace_back(c.name);
  return v;
}

std::map<std::string, double> acceptance_tolerances() {
  return {
      {"mountain_pass.beta", 1e-4},  {"mountain_pass.point", 1e-6},  {"mountain_pass.seconds", 10},
      {"index_bound.point", 1e-3},   {"index_bound.grid_step", 1e-3}, {"index_bound.seconds", 60},
      {"deformation.descent", 1e-12}, {"deformation.landing", 1e-10}, {"degenerate.retries", 10},
      {"degenerate.seconds", 30},    {"entropy.margin", 0.1},         {"entropy.seconds", 5},
      {"near_critical.seconds", 20}, {"geodesic.length", 0.02},       {"geodesic.seconds", 300},
      {"hygiene.grad", 1e-5},        {"hygiene.hessian", 1e-4},       {"hygiene.weyl", 1e-12},
  };
}

std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& options, std::ostream* progress) {
  auto tol = acceptance_tolerances();
  for (const auto& [k, v] : options.tolerances) {
    if (!tol.count(k)) {
      std::string valid;
      for (const auto& [name, _] : tol) valid += (valid.empty() ? "" : ", ") + name;
      throw ConfigError("unknown acceptance tolerance '" + k + "'; valid: " + valid);
    }
    tol[k] = v;
  }
  std::vector<AcceptanceRow> rows;
  int id = 0;
  for (const auto& c : checks()) {
    ++id;
    if (!options.filter.empty() && std::string(c.name).find(options.filter) == std::string::npos) continue;
    const auto t0 = Clock::now();
    AcceptanceRow row;
    try {
      row = c.fn(tol);
    } catch (const std::exception& e) {
      row = AcceptanceRow{};
      row.actual = std::string("error: ") + e.what();
    }
    row.id = id;
    row.name = c.name;
    row.seconds = since(t0);
    if (progress) *progress << format_row(row) << std::endl;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_row(const AcceptanceRow& r) {
  std::ostringstream os;
  const char* verdict = r.pass ? "PASS" : (r.known_gap ? "FAIL (known gap)" : "FAIL");
  os << "[" << r.id << "] " << std::left << std::setw(14) << r.name << " " << verdict << " | expected: " << r.expected
     << " | actual: " << r.actual << " | tolerance: " << r.tolerance;
  if (!r.reason.empty()) os << " | reason: " << r.reason;
  return os.str();
}

std::string format_table(const std::vector<AcceptanceRow>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) os << format_row(r) << "\n";
  int pass = 0, gaps = 0;
  for (const auto& r : rows) {
    pass += r.pass;
    gaps += !r.pass && r.known_gap;
  }
  os << pass << "/" << rows.size() << " passed";
  if (gaps) os << ", " << gaps << " known gap" << (gaps > 1 ? "s" : "");
  os << "\n";
  return os.str();
}

bool all_pass(const std::vector<AcceptanceRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const AcceptanceRow& r) { return r.pass; });
}

bool only_known_gaps(const std::vector<AcceptanceRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const AcceptanceRow& r) { return r.pass || r.known_gap; });
}

}  // namespace vmm
