#include "vmm/deform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vmm/critical.hpp"
#include "vmm/parallel.hpp"

namespace vmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

// The validity test compares against delta / 4 for the radii fitted from rho.
double validity_threshold(double rho) {
  const double r2 = rho / 2.0, r1 = r2 / 4.0;
  return chart_delta(r1, r2) / 4.0;
}

Vector random_in_ball(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  const double nv = v.norm();
  if (nv == 0.0) return v;
  return v * (u(rng) / nv);
}

ChartPoint split(const Vector& z, int k) {
  return {z.head(k), z.tail(z.size() - k)};
}

}  // namespace

double chart_delta_bound(double r1, double r2) {
  if (!(r1 > 0.0) || !(2.0 * r1 < r2)) throw DomainError("chart radii need 0 < 2 r1 < r2");
  return r2 * r2 - 4.0 * r1 * r1;
}

double chart_delta(double r1, double r2) { return chart_delta_bound(r1, r2) / 2.0; }

void MorseChart::set_radii(double r1, double r2) {
  delta_ = chart_delta(r1, r2);
  r1_ = r1;
  r2_ = r2;
}

MorseChart MorseChart::with_radii(double r1, double r2) const {
  MorseChart c = *this;
  c.set_radii(r1, r2);
  return c;
}

MorseChart MorseChart::normal_form(Point center, double level, const Matrix& hessian, double r1,
                                   double r2, const ToleranceProfile& tol) {
  if (hessian.rows() != center.size() || hessian.cols() != center.size())
    throw DimensionError("normal_form: Hessian does not match the center");
  const MorseData m = morse_data_of(hessian, tol);
  if (m.degenerate()) throw PreconditionError("normal_form: degenerate Hessian");
  MorseChart c;
  c.center_ = std::move(center);
  c.level_ = level;
  c.index_ = m.index;
  c.eigenvalues_ = m.eigenvalues;
  c.basis_ = m.eigenvectors;
  c.validity_ = kInf;
  c.set_radii(r1, r2);
  return c;
}

Vector MorseChart::fibre_min(const Vector& a) const {
  const Eigen::Index p = dim() - index_;
  Vector b = Vector::Zero(p);
  if (!family_ || p == 0) return b;
  const Vector lam = eigenvalues_.tail(p);
  const Matrix vp = pos_basis();
  const Point base = center_ + neg_basis() * a;
  double prev = kInf;
  for (int it = 0; it < 200; ++it) {
    const Vector g = vp.transpose() * family_->gradient(sigma_, base + vp * b);
    const Vector step = g.cwiseQuotient(lam);
    b -= step;
    const double s = step.norm();
    if (!std::isfinite(s) || b.norm() > 1e6)
      throw EvaluationError("chart: fibre minimiser diverged", base);
    if (s <= 1e-15 * (1.0 + b.norm())) break;
    // Chord iteration has reached its rounding floor.
    if (it > 3 && s >= prev && s < 1e-11 * (1.0 + b.norm())) break;
    prev = s;
  }
  return b;
}

ChartPoint MorseChart::to_chart(const Point& x) const {
  if (x.size() != dim()) throw DimensionError("chart: point dimension mismatch");
  const Vector c = basis_.transpose() * (x - center_);
  const Vector s = scales();
  const Vector a = c.head(index_);
  const Eigen::Index p = dim() - index_;
  ChartPoint z;
  z.neg = s.head(index_).cwiseProduct(a) / kSqrt2;
  z.pos = s.tail(p).cwiseProduct(c.tail(p) - fibre_min(a)) / kSqrt2;
  return z;
}

Point MorseChart::from_chart(const ChartPoint& z) const {
  const Eigen::Index p = dim() - index_;
  if (z.neg.size() != index_ || z.pos.size() != p) throw DimensionError("chart: coordinate split mismatch");
  const Vector s = scales();
  const Vector a = kSqrt2 * z.neg.cwiseQuotient(s.head(index_));
  const Vector b = fibre_min(a) + kSqrt2 * z.pos.cwiseQuotient(s.tail(p));
  Vector c(dim());
  c << a, b;
  return center_ + basis_ * c;
}

double MorseChart::model(const ChartPoint& z) const {
  return level_ + z.pos.squaredNorm() - z.neg.squaredNorm();
}

bool MorseChart::in_cylinder(const ChartPoint& z, double s, double t, bool open) const {
  if (open) return z.neg.norm() < s && z.pos.norm() < t;
  return z.neg.norm() <= s && z.pos.norm() <= t;
}

double chart_model_error(const MorseChart& chart, const ViscousFamily& family, double rho,
                         int samples, unsigned long long seed) {
  const Eigen::Index n = chart.dim();
  const int k = chart.index();
  std::vector<Vector> zs;
  zs.reserve(2 * n + samples);
  for (Eigen::Index i = 0; i < n; ++i) {
    zs.push_back(Vector::Unit(n, i) * rho);
    zs.push_back(-Vector::Unit(n, i) * rho);
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) zs.push_back(rho * random_in_ball(rng, n));
  std::vector<double> err(zs.size(), 0.0);
  parallel_for(zs.size(), [&](std::size_t i) {
    try {
      const ChartPoint z = split(zs[i], k);
      const double e = std::abs(family.value(chart.sigma(), chart.from_chart(z)) - chart.model(z));
      err[i] = std::isfinite(e) ? e : kInf;
    } catch (const Error&) {
      err[i] = kInf;
    }
  });
  return *std::max_element(err.begin(), err.end());
}

MorseChart build_chart(const CriticalPointRecord& record, const ViscousFamily& family, double sigma,
                       const ChartOptions& options) {
  if (record.point.size() != family.dim()) throw DimensionError("build_chart: record dimension mismatch");
  MorseData m;
  if (record.morse && record.sigma == sigma) {
    m = *record.morse;
  } else {
    m = morse_data(record.point, family, sigma, options.tol);
  }
  if (m.degenerate() || !(m.gap > m.tol_null))
    throw PreconditionError("build_chart: degenerate critical point (nullity " + std::to_string(m.nullity) +
                            "); make it non-degenerate with the perturb module first");
  if (!(options.max_radius > 0.0)) throw DomainError("build_chart: max_radius must be positive");

  MorseChart c;
  c.center_ = record.point;
  c.sigma_ = sigma;
  c.level_ = family.value(sigma, record.point);
  c.index_ = m.index;
  c.eigenvalues_ = m.eigenvalues;
  c.basis_ = m.eigenvectors;
  c.family_ = std::make_shared<const ViscousFamily>(family);

  const Eigen::Index p = c.dim() - c.index_;
  const Matrix vp = c.pos_basis();
  auto ok = [&](double rho) {
    if (chart_model_error(c, family, rho, options.samples, options.seed) >= validity_threshold(rho))
      return false;
    if (p == 0) return true;
    // Convexity of F_sigma along the positive fibres, spot-checked on the chart ball.
    std::mt19937_64 rng(options.seed + 1);
    for (int i = 0; i < 8; ++i) {
      const Vector z = (i == 0 ? Vector(Vector::Zero(c.dim())) : Vector(rho * random_in_ball(rng, c.dim())));
      try {
        const Matrix h = vp.transpose() * family.hessian(sigma, c.from_chart(split(z, c.index_))) * vp;
        if (Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues()[0] <= 0.0)
          return false;
      } catch (const Error&) {
        return false;
      }
    }
    return true;
  };

  double rho = options.max_radius;
  if (!ok(rho)) {
    double lo = rho;
    do {
      lo /= 2.0;
      if (lo < 1e-9 * options.max_radius)
        throw Error("build_chart: quadratic model fails at every sampled radius");
    } while (!ok(lo));
    double hi = 2.0 * lo;
    for (int i = 0; i < options.bisection_steps && hi - lo > 1e-4 * lo; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    rho = lo;
  }
  c.validity_ = rho;
  c.set_radii(rho / 8.0, rho / 2.0);
  return c;
}

Point deform_phi(const Point& x, const MorseChart& chart, const CutoffZeta& zeta) {
  if (x.size() != chart.dim()) throw DimensionError("deform_phi: point dimension mismatch");
  const int k = chart.index();
  const Eigen::Index p = chart.dim() - k;
  const Vector c = chart.neg_basis().transpose() * (x - chart.center());
  const Vector s = chart.scales();
  const double zn = (s.head(k).cwiseProduct(c) / kSqrt2).norm();
  if (zn >= 2.0 * chart.r1()) return x;
  const ChartPoint z = chart.to_chart(x);
  if (z.pos.norm() > chart.r2()) return x;
  const double f = zeta(zn / chart.r1() - 1.0);
  if (f == 1.0) return x;
  return chart.from_chart({z.neg, f * z.pos.head(p)});
}

namespace {

std::vector<std::size_t> neighbours(const Sweepout& s, std::size_t i) {
  std::vector<std::size_t> out;
  if (s.d == 1) {
    if (i > 0) out.push_back(i - 1);
    if (i + 1 < s.size()) out.push_back(i + 1);
    return out;
  }
  const std::size_t r = i / s.M2, c = i % s.M2;
  if (r > 0) out.push_back(i - s.M2);
  if (r + 1 < static_cast<std::size_t>(s.M)) out.push_back(i + s.M2);
  if (c > 0) out.push_back(i - 1);
  if (c + 1 < static_cast<std::size_t>(s.M2)) out.push_back(i + 1);
  return out;
}

Vector neg_coords(const MorseChart& chart, const Point& x) {
  const int k = chart.index();
  return chart.scales().head(k).cwiseProduct(chart.neg_basis().transpose() * (x - chart.center())) / kSqrt2;
}

// Insert interpolated frames on path segments near the chart so that consecutive frames in
// the surgery region are at most r1 / 16 apart in chart coordinates.
Sweepout densify(const Sweepout& s, const MorseChart& chart) {
  if (s.d != 1) return s;
  const Vector sc = chart.scales();
  auto lin = [&](const Point& x) -> Vector {
    return sc.cwiseProduct(chart.basis().transpose() * (x - chart.center())) / kSqrt2;
  };
  const int k = chart.index();
  const double h = chart.r1() / 16.0;
  Sweepout out;
  out.d = 1;
  out.M2 = 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.frames.push_back(s.frames[i]);
    out.boundary.push_back(s.boundary[i]);
    if (i + 1 == s.size()) break;
    const Vector za = lin(s.frames[i]), zb = lin(s.frames[i + 1]);
    // Segment distance to the origin in linear chart coordinates.
    const Vector d = zb - za;
    const double t = d.squaredNorm() > 0 ? std::clamp(-za.dot(d) / d.squaredNorm(), 0.0, 1.0) : 0.0;
    const Vector w = za + t * d;
    if (w.head(k).norm() >= 2.0 * chart.r1() || w.tail(w.size() - k).norm() > 2.0 * chart.r2()) continue;
    const int extra = std::min(4096, static_cast<int>(std::ceil(d.norm() / h)) - 1);
    for (int j = 1; j <= extra; ++j) {
      const double u = static_cast<double>(j) / (extra + 1);
      out.frames.push_back(s.frames[i] + u * (s.frames[i + 1] - s.frames[i]));
      out.boundary.push_back(false);
    }
  }
  out.M = static_cast<int>(out.frames.size());
  return out;
}

double chart_norm(const MorseChart& chart, const Point& x) {
  try {
    const ChartPoint z = chart.to_chart(x);
    return std::sqrt(z.neg.squaredNorm() + z.pos.squaredNorm());
  } catch (const Error&) {
    return kInf;
  }
}

}  // namespace

Sweepout surgery_admissible(const Sweepout& sweepout, const MorseChart& chart,
                            const ViscousFamily& family, double sigma, SurgeryReport* report,
                            const SurgeryOptions& options) {
  sweepout.validate(false);
  if (chart.index() <= sweepout.d)
    throw PreconditionError("surgery not applicable, index within bound (index " +
                            std::to_string(chart.index()) + " <= d = " + std::to_string(sweepout.d) + ")");
  if (sweepout.dim() != chart.dim()) throw DimensionError("surgery: sweepout and chart dimensions differ");
  const double sup_before = sup_over(sweepout, family, sigma).first;
  if (sup_before > chart.level() + chart.delta() + 1e-12)
    throw PreconditionError("surgery: sup " + std::to_string(sup_before) + " exceeds level + delta = " +
                            std::to_string(chart.level() + chart.delta()));

  Sweepout out = densify(sweepout, chart);
  const double r1 = chart.r1(), r2 = chart.r2();
  const int k = chart.index();
  const CutoffZeta zeta;

  SurgeryReport rep;
  rep.kind = "admissible";
  rep.sup_before = sup_before;

  // Step 1: Phi on the frames in C(2 r1, r2); remember which ones land in the open negative disc.
  std::vector<std::size_t> disc;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (neg_coords(chart, out.frames[i]).norm() >= 2.0 * r1) continue;
    const ChartPoint z = chart.to_chart(out.frames[i]);
    if (z.pos.norm() > r2) continue;
    if (out.boundary[i])
      throw PreconditionError("surgery: boundary frame " + std::to_string(i) + " lies in the surgery cylinder");
    const Point y = deform_phi(out.frames[i], chart, zeta);
    if (y != out.frames[i]) ++rep.frames_moved;
    out.frames[i] = y;
    if (z.neg.norm() < r1) disc.push_back(i);
  }

  if (!disc.empty()) {
    // Step 2: a point of B-(0, 0.9 r1) missed by the frame images.
    std::vector<Vector> img(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) img[i] = neg_coords(chart, out.frames[i]);
    double spacing = 0.0;
    for (std::size_t i : disc)
      for (std::size_t j : neighbours(out, i)) spacing = std::max(spacing, (img[i] - img[j]).norm());
    const double reject = 2.0 * spacing;
    std::mt19937_64 rng(options.seed);
    Vector p;
    int draws = 0;
    while (draws < options.max_draws) {
      ++draws;
      const Vector q = 0.9 * r1 * random_in_ball(rng, k);
      bool hit = false;
      for (std::size_t i = 0; i < out.size() && !hit; ++i) hit = (img[i] - q).norm() <= reject;
      if (!hit) {
        p = q;
        break;
      }
    }
    rep.draws = draws;
    if (p.size() == 0)
      throw Error("surgery: no missed point in the negative disc after " + std::to_string(options.max_draws) +
                  " draws (frame spacing " + std::to_string(spacing) + "); the family dimension is likely >= index");
    rep.missed_point = p;

    // Step 3: radial projection from p onto the sphere of radius r1, pulled back with z+ = 0.
    const Vector zero_pos = Vector::Zero(chart.dim() - k);
    for (std::size_t i : disc) {
      const Vector u = img[i] - p;
      const double uu = u.squaredNorm(), pu = p.dot(u);
      const double t = (-pu + std::sqrt(pu * pu + uu * (r1 * r1 - p.squaredNorm()))) / uu;
      Vector w = p + t * u;
      w *= r1 / w.norm();
      out.frames[i] = chart.from_chart({w, zero_pos});
      ++rep.frames_projected;
    }
  }

  rep.sup_after = sup_over(out, family, sigma).first;
  rep.min_center_distance = kInf;
  for (const auto& f : out.frames) rep.min_center_distance = std::min(rep.min_center_distance, chart_norm(chart, f));
  if (report) *report = rep;
  if (rep.sup_after > sup_before + 1e-12)
    throw Error("surgery raised the sup from " + std::to_string(sup_before) + " to " + std::to_string(rep.sup_after));
  if (rep.min_center_distance < 0.5 * r1 * (1.0 - 1e-12))
    throw Error("surgery left a frame within r1/2 of the critical point");
  return out;
}

Sweepout surgery_dual(const Sweepout& pointset, const MorseChart& chart, const ViscousFamily& family,
                      double sigma, SurgeryReport* report) {
  pointset.validate(false);
  if (chart.index() >= pointset.d)
    throw PreconditionError("dual surgery not applicable: index " + std::to_string(chart.index()) +
                            " >= d = " + std::to_string(pointset.d));
  if (pointset.dim() != chart.dim()) throw DimensionError("surgery: pointset and chart dimensions differ");
  SurgeryReport rep;
  rep.kind = "dual";
  rep.sup_before = sup_over(pointset, family, sigma).first;

  Sweepout out = pointset;
  out.frames.clear();
  out.boundary.clear();
  for (std::size_t i = 0; i < pointset.size(); ++i) {
    const Point y = deform_phi(pointset.frames[i], chart);
    if (y != pointset.frames[i]) ++rep.frames_moved;
    bool inside = false;
    if (neg_coords(chart, y).norm() < chart.r1()) inside = chart.in_cylinder(chart.to_chart(y), chart.r1(), chart.r2(), true);
    if (inside) {
      if (!(family.value(sigma, y) < rep.sup_before))
        throw Error("dual surgery: deleted frame " + std::to_string(i) + " is not below the sup");
      ++rep.frames_deleted;
      continue;
    }
    out.frames.push_back(y);
    out.boundary.push_back(pointset.boundary[i]);
  }
  if (out.frames.empty()) throw PreconditionError("dual surgery deleted every frame");
  if (pointset.d == 1 || rep.frames_deleted > 0) {
    out.M = static_cast<int>(out.frames.size());
    out.M2 = 1;
  }
  rep.sup_after = sup_over(out, family, sigma).first;
  rep.min_center_distance = kInf;
  for (const auto& f : out.frames) rep.min_center_distance = std::min(rep.min_center_distance, chart_norm(chart, f));
  if (report) *report = rep;
  return out;
}

FamilyKind parse_family_kind(const std::string& s) {
  if (s == "admissible") return FamilyKind::admissible;
  if (s == "dual") return FamilyKind::dual;
  if (s == "codual") return FamilyKind::codual;
  throw DomainError("unknown family kind '" + s + "' (expected admissible, dual or codual)");
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::admissible: return "admissible";
    case FamilyKind::dual: return "dual";
    case FamilyKind::codual: return "codual";
  }
  return "admissible";
}

bool certify_index_bound(const CriticalPointRecord& record, int d, FamilyKind kind) {
  if (!record.morse) throw PreconditionError("certify_index_bound: record has no Morse data");
  const int ind = record.morse->index, nul = record.morse->nullity;
  switch (kind) {
    case FamilyKind::admissible: return ind <= d;
    case FamilyKind::dual: return ind >= d;
    case FamilyKind::codual: return ind <= d && d <= ind + nul;
  }
  return false;
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
double num_of(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }
std::vector<double> flat(const Eigen::Ref<const Matrix>& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

void to_json(nlohmann::json& j, const MorseChart& c) {
  j = {{"center", flat(c.center())},
       {"level", c.level()},
       {"sigma", c.sigma()},
       {"index", c.index()},
       {"eigenvalues", flat(c.eigenvalues())},
       {"basis", flat(c.basis())},
       {"r1", c.r1()},
       {"r2", c.r2()},
       {"delta", c.delta()},
       {"validity_radius", num(c.validity_radius())}};
}

void from_json(const nlohmann::json& j, MorseChart& c) {
  const auto center = j.at("center").get<std::vector<double>>();
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  const auto basis = j.at("basis").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(center.size());
  if (static_cast<Eigen::Index>(ev.size()) != n || static_cast<Eigen::Index>(basis.size()) != n * n)
    throw DimensionError("chart json: inconsistent sizes");
  c = MorseChart();
  c.center_ = Eigen::Map<const Vector>(center.data(), n);
  c.eigenvalues_ = Eigen::Map<const Vector>(ev.data(), n);
  c.basis_ = Eigen::Map<const Matrix>(basis.data(), n, n);
  c.level_ = j.at("level").get<double>();
  c.sigma_ = j.value("sigma", 0.0);
  c.index_ = j.at("index").get<int>();
  c.validity_ = num_of(j.at("validity_radius"));
  c.set_radii(j.at("r1").get<double>(), j.at("r2").get<double>());
  c.delta_ = j.at("delta").get<double>();
}

void to_json(nlohmann::json& j, const SurgeryReport& r) {
  j = {{"kind", r.kind},
       {"sup_before", r.sup_before},
       {"sup_after", r.sup_after},
       {"frames_moved", r.frames_moved},
       {"frames_projected", r.frames_projected},
       {"frames_deleted", r.frames_deleted},
       {"draws", r.draws},
       {"missed_point", flat(r.missed_point)},
       {"min_center_distance", num(r.min_center_distance)}};
}

void from_json(const nlohmann::json& j, SurgeryReport& r) {
  r.kind = j.at("kind").get<std::string>();
  r.sup_before = j.at("sup_before").get<double>();
  r.sup_after = j.at("sup_after").get<double>();
  r.frames_moved = j.at("frames_moved").get<int>();
  r.frames_projected = j.at("frames_projected").get<int>();
  r.frames_deleted = j.at("frames_deleted").get<int>();
  r.draws = j.at("draws").get<int>();
  const auto p = j.at("missed_point").get<std::vector<double>>();
  r.missed_point = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
  r.min_center_distance = num_of(j.at("min_center_distance"));
}

}  // namespace vmm
