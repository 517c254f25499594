#include "vmm/sweepout.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>

#include "vmm/parallel.hpp"

namespace vmm {

namespace {

[[noreturn]] void rethrow_for_frame(std::size_t i, const EvaluationError& e) {
  throw EvaluationError("frame " + std::to_string(i) + ": " + e.what(), e.point());
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// Remove from g its components along the family's tangent directions at frame i, so frames move
// across the family and never slide along it; spacing along the family is the job of the
// reparametrization pass.
void project_tangents(const Sweepout& s, std::size_t i, Vector& g) {
  std::vector<Vector> dirs;
  const auto central = [&](std::size_t a, std::size_t b) {
    Vector t = s.frames[b] - s.frames[a];
    for (const auto& q : dirs) t -= t.dot(q) * q;
    const double n = t.norm();
    if (n > 0.0) dirs.push_back(t / n);
  };
  if (s.d == 1) {
    central(i - 1, i + 1);
  } else {
    const std::size_t r = i / s.M2, c = i % s.M2, m2 = s.M2;
    central((r - 1) * m2 + c, (r + 1) * m2 + c);
    central(r * m2 + c - 1, r * m2 + c + 1);
  }
  for (const auto& q : dirs) g -= g.dot(q) * q;
}

}  // namespace

Sweepout Sweepout::path(std::vector<Point> frames) {
  Sweepout s;
  s.d = 1;
  s.M = static_cast<int>(frames.size());
  s.M2 = 1;
  s.frames = std::move(frames);
  s.boundary.assign(s.frames.size(), false);
  if (!s.boundary.empty()) s.boundary.front() = s.boundary.back() = true;
  s.validate();
  return s;
}

Sweepout Sweepout::straight_line(const Point& a, const Point& b, int M) {
  if (a.size() != b.size()) throw DimensionError("straight_line: endpoint dimensions differ");
  if (M < 2) throw PreconditionError("straight_line: need at least two frames");
  std::vector<Point> f(M);
  for (int i = 0; i < M; ++i) {
    const double t = static_cast<double>(i) / (M - 1);
    f[i] = a + t * (b - a);
  }
  f.front() = a;
  f.back() = b;
  return path(std::move(f));
}

Sweepout Sweepout::grid(std::vector<Point> frames, int M, int M2) {
  Sweepout s;
  s.d = 2;
  s.M = M;
  s.M2 = M2;
  s.frames = std::move(frames);
  s.boundary.assign(s.frames.size(), false);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M2; ++j)
      if (i == 0 || j == 0 || i == M - 1 || j == M2 - 1) s.boundary[i * M2 + j] = true;
  s.validate();
  return s;
}

void Sweepout::validate(bool min_frames) const {
  if (d != 1 && d != 2) throw PreconditionError("sweepout: d must be 1 or 2");
  if (frames.empty()) throw PreconditionError("sweepout: no frames");
  if (static_cast<std::size_t>(M) * static_cast<std::size_t>(M2) != frames.size())
    throw PreconditionError("sweepout: frame count does not match the M x M2 shape");
  if (boundary.size() != frames.size()) throw PreconditionError("sweepout: boundary mask size");
  if (d == 1 && M2 != 1) throw PreconditionError("sweepout: d = 1 needs M2 = 1");
  if (min_frames && d == 1 && M < kMinPathFrames)
    throw PreconditionError("sweepout: a path needs at least " + std::to_string(kMinPathFrames) +
                            " frames, got " + std::to_string(M));
  const Eigen::Index n = frames.front().size();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].size() != n) throw DimensionError("sweepout: frame " + std::to_string(i) + " has wrong dimension");
    if (!frames[i].allFinite()) throw PreconditionError("sweepout: frame " + std::to_string(i) + " is not finite");
  }
}

std::vector<double> frame_values(const Sweepout& sweepout, const ViscousFamily& family,
                                 double sigma) {
  std::vector<double> v(sweepout.size());
  parallel_for(v.size(), [&](std::size_t i) {
    try {
      v[i] = family.value(sigma, sweepout.frames[i]);
    } catch (const EvaluationError& e) {
      rethrow_for_frame(i, e);
    }
  });
  return v;
}

std::pair<double, int> sup_over(const Sweepout& sweepout, const ViscousFamily& family, double sigma) {
  const auto v = frame_values(sweepout, family, sigma);
  const auto it = std::max_element(v.begin(), v.end());  // first maximum
  return {*it, static_cast<int>(it - v.begin())};
}

double boundary_value(const Sweepout& sweepout, const ViscousFamily& family, double sigma) {
  double b = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sweepout.size(); ++i)
    if (sweepout.boundary[i]) b = std::max(b, family.value(sigma, sweepout.frames[i]));
  return b;
}

Sweepout equalize_spacing(const Sweepout& sweepout) {
  if (sweepout.d != 1) return sweepout;
  const auto& f = sweepout.frames;
  const std::size_t m = f.size();
  std::vector<double> cum(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) cum[i] = cum[i - 1] + (f[i] - f[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) return sweepout;
  Sweepout out = sweepout;
  std::size_t k = 0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (sweepout.boundary[i]) continue;
    const double s = total * static_cast<double>(i) / static_cast<double>(m - 1);
    while (k + 1 < m - 1 && cum[k + 1] < s) ++k;
    const double seg = cum[k + 1] - cum[k];
    const double t = seg > 0.0 ? (s - cum[k]) / seg : 0.0;
    out.frames[i] = f[k] + t * (f[k + 1] - f[k]);
  }
  return out;
}

TightenResult tighten(const Sweepout& sweepout, const ViscousFamily& family, double sigma,
                      int budget, const TightenOptions& options) {
  if (budget < 1) throw PreconditionError("tighten: budget must be >= 1");
  sweepout.validate(false);
  TightenResult r;
  r.sweepout = sweepout;
  Sweepout& s = r.sweepout;
  std::vector<double> vals = frame_values(s, family, sigma);
  r.sup_before = max_of(vals);

  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.boundary[i]) interior.push_back(i);
  std::vector<double> steps(s.size(), options.initial_step);

  for (int it = 0; it < budget; ++it) {
    r.iterations = it + 1;
    const double hi = max_of(vals);
    const double lo = *std::min_element(vals.begin(), vals.end());
    const double tau = options.temperature_frac * (hi - lo);
    std::atomic<int> failures{0};
    std::atomic<int> moved{0};
    std::atomic<bool> small_grad{true};
    const Sweepout snapshot = s;  // neighbours are read from here while frames update

    parallel_for(interior.size(), [&](std::size_t k) {
      const std::size_t i = interior[k];
      const double w = tau > 0.0 ? std::exp((vals[i] - hi) / tau) : 1.0;
      if (w < 1e-12) return;
      Vector g;
      try {
        g = family.gradient(sigma, s.frames[i]);
      } catch (const EvaluationError& e) {
        rethrow_for_frame(i, e);
      }
      if (options.project_tangent) project_tangents(snapshot, i, g);
      const double gn2 = g.squaredNorm();
      if (w > 0.5 && std::sqrt(gn2) > options.stop_grad) small_grad = false;
      if (gn2 == 0.0) return;
      double t = steps[i];
      for (int b = 0; b <= options.max_backtracks; ++b, t *= 0.5) {
        const Point trial = s.frames[i] - (t * w) * g;
        double ft;
        try {
          ft = family.value(sigma, trial);
        } catch (const EvaluationError&) {
          continue;
        }
        if (ft <= vals[i] - options.armijo * t * w * gn2) {
          s.frames[i] = trial;
          vals[i] = ft;
          steps[i] = std::min(2.0 * t, 1.0);
          ++moved;
          return;
        }
      }
      ++failures;
    });
    r.line_search_failures += failures;
    if (max_of(vals) > hi) throw Error("tighten: sup increased during descent");

    bool reparam = false;
    if (options.reparametrize && s.d == 1) {
      Sweepout eq = equalize_spacing(s);
      try {
        auto ev = frame_values(eq, family, sigma);
        if (max_of(ev) <= max_of(vals)) {
          reparam = true;
          s = std::move(eq);
          vals = std::move(ev);
        } else {
          ++r.reparam_rejected;
        }
      } catch (const EvaluationError&) {
        ++r.reparam_rejected;
      }
    }
    if (options.stop_grad > 0.0 && small_grad) break;
    if (moved == 0 && !reparam) break;
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    if (sweepout.boundary[i]) s.frames[i] = sweepout.frames[i];
  r.sup_after = max_of(vals);
  return r;
}

std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w) {
  const std::size_t n = y.size();
  if (!w.empty() && w.size() != n) throw DimensionError("isotonic_fit: weight count");
  struct Block {
    double mean, weight;
    std::size_t len;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back({y[i], w.empty() ? 1.0 : w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double tw = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / tw;
      a.weight = tw;
      a.len += b.len;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& b : blocks) out.insert(out.end(), b.len, b.mean);
  return out;
}

double WidthCurve::beta_at(double sigma) const {
  if (sigmas.empty() || sigma < sigmas.front() || sigma > sigmas.back())
    throw DomainError("width curve: sigma outside the sampled grid");
  const auto it = std::lower_bound(sigmas.begin(), sigmas.end(), sigma);
  const std::size_t k = static_cast<std::size_t>(it - sigmas.begin());
  if (sigmas[k] == sigma) return betas[k];
  const double t = (sigma - sigmas[k - 1]) / (sigmas[k] - sigmas[k - 1]);
  return betas[k - 1] + t * (betas[k] - betas[k - 1]);
}

WidthCurve estimate_width_curve(const Sweepout& seed, const ViscousFamily& family,
                                const std::vector<double>& sigma_grid, int budget,
                                bool keep_sweepouts, const TightenOptions& options) {
  if (sigma_grid.empty()) throw PreconditionError("width curve: empty sigma grid");
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] >= 0.0 && std::isfinite(sigma_grid[i])))
      throw DomainError("width curve: grid values must be finite and >= 0");
    if (i && !(sigma_grid[i] > sigma_grid[i - 1]))
      throw PreconditionError("width curve: grid must be strictly increasing");
  }
  WidthCurve c;
  Sweepout current = seed;
  for (double s : sigma_grid) {
    auto r = tighten(current, family, s, budget, options);
    current = std::move(r.sweepout);
    const auto [sup, arg] = sup_over(current, family, s);
    c.sigmas.push_back(s);
    c.raw_betas.push_back(sup);
    c.argmax_frames.push_back(arg);
    if (keep_sweepouts) c.tightened.push_back(current);
  }
  c.betas = isotonic_fit(c.raw_betas);
  return c;
}

bool check_nontrivial(const WidthCurve& curve, double boundary_value, double margin) {
  if (!(margin > 0.0)) throw PreconditionError("check_nontrivial: margin must be > 0");
  if (curve.betas.empty()) throw PreconditionError("check_nontrivial: empty width curve");
  return curve.betas.front() > boundary_value + margin;
}

std::vector<double> geometric_grid(double lo, double hi, int n, bool with_zero) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw DomainError("geometric grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g;
  if (with_zero) g.push_back(0.0);
  const double ratio = std::pow(hi / lo, 1.0 / (n - 1));
  for (int i = 0; i < n; ++i) g.push_back(i == n - 1 ? hi : lo * std::pow(ratio, i));
  return g;
}

void to_json(nlohmann::json& j, const Sweepout& s) {
  std::vector<double> flat;
  flat.reserve(s.size() * static_cast<std::size_t>(s.dim()));
  for (const auto& f : s.frames) flat.insert(flat.end(), f.data(), f.data() + f.size());
  std::vector<int> mask(s.boundary.begin(), s.boundary.end());
  j = {{"d", s.d}, {"M", s.M}, {"M2", s.M2}, {"dim", s.dim()}, {"boundary_mask", mask}, {"frames", flat}};
}

void from_json(const nlohmann::json& j, Sweepout& s) {
  s.d = j.at("d").get<int>();
  s.M = j.at("M").get<int>();
  s.M2 = j.value("M2", 1);
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto flat = j.at("frames").get<std::vector<double>>();
  const auto mask = j.at("boundary_mask").get<std::vector<int>>();
  if (dim <= 0 || flat.size() % static_cast<std::size_t>(dim) != 0)
    throw PreconditionError("sweepout json: frames length is not a multiple of dim");
  s.frames.clear();
  for (std::size_t k = 0; k < flat.size(); k += dim)
    s.frames.push_back(Eigen::Map<const Vector>(flat.data() + k, dim));
  s.boundary.assign(mask.begin(), mask.end());
  s.validate(false);
}

void to_json(nlohmann::json& j, const WidthCurve& c) {
  j = {{"sigmas", c.sigmas}, {"betas", c.betas}, {"raw_betas", c.raw_betas}, {"argmax_frames", c.argmax_frames}};
}

void from_json(const nlohmann::json& j, WidthCurve& c) {
  c.sigmas = j.at("sigmas").get<std::vector<double>>();
  c.betas = j.at("betas").get<std::vector<double>>();
  c.raw_betas = j.at("raw_betas").get<std::vector<double>>();
  c.argmax_frames = j.at("argmax_frames").get<std::vector<int>>();
  c.tightened.clear();
}

void write_width_csv(std::ostream& os, const WidthCurve& curve) {
  const auto old = os.precision(17);
  os << "sigma,beta,argmax\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    os << curve.sigmas[i] << ',' << curve.betas[i] << ',' << curve.argmax_frames[i] << '\n';
  os.precision(old);
}

}  // namespace vmm
