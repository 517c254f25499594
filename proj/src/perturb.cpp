#include "vmm/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vmm/critical.hpp"
#include "vmm/cutoff.hpp"
#include "vmm/parallel.hpp"

namespace vmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> flat(const Point& p) { return {p.data(), p.data() + p.size()}; }
Point point_of(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

BumpFunction::BumpFunction(std::vector<Point> centers, double delta)
    : centers_(std::move(centers)), delta_(delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("bump: delta must be positive");
  if (centers_.empty()) throw PreconditionError("bump: no centers");
  for (const auto& c : centers_)
    if (c.size() != centers_.front().size()) throw DimensionError("bump: centers differ in dimension");
  for (const auto& a : centers_) {
    int n = 0;
    for (const auto& b : centers_) n += (a - b).norm() < 4.0 * delta_;
    overlap_ = std::max(overlap_, n);
  }
}

BumpFunction::Parts BumpFunction::sum(const Point& x, int order) const {
  if (x.size() != dim()) throw DimensionError("bump: point dimension mismatch");
  const Eigen::Index n = x.size();
  const double d2 = delta_ * delta_;
  Parts p;
  if (order >= 1) p.ds = Vector::Zero(n);
  if (order >= 2) p.d2s = Matrix::Zero(n, n);
  for (const auto& c : centers_) {
    const Vector r = x - c;
    const double t = r.squaredNorm() / d2;
    if (t >= CutoffEta::hi) continue;
    const auto e = CutoffEta::eval(t);
    p.s += e[0];
    if (order >= 1) p.ds += (2.0 * e[1] / d2) * r;
    if (order >= 2) {
      p.d2s += (4.0 * e[2] / (d2 * d2)) * r * r.transpose();
      p.d2s.diagonal().array() += 2.0 * e[1] / d2;
    }
  }
  return p;
}

double BumpFunction::value(const Point& x) const { return CutoffZeta::eval(sum(x, 0).s)[0]; }

Vector BumpFunction::gradient(const Point& x) const {
  const Parts p = sum(x, 1);
  return CutoffZeta::eval(p.s)[1] * p.ds;
}

Matrix BumpFunction::hessian(const Point& x) const {
  const Parts p = sum(x, 2);
  const auto z = CutoffZeta::eval(p.s);
  return z[2] * p.ds * p.ds.transpose() + z[1] * p.d2s;
}

bool BumpFunction::in_support(const Point& x) const {
  const double r = 2.0 * delta_;
  return std::any_of(centers_.begin(), centers_.end(), [&](const Point& c) { return (x - c).norm() < r; });
}

const ProfileBounds& profile_bounds() {
  static const ProfileBounds b = [] {
    double s1 = 0.0, s2 = 0.0;
    constexpr int n = 200000;
    for (int i = 1; i < n; ++i) {
      const auto s = CutoffZeta::eval(static_cast<double>(i) / n);
      s1 = std::max(s1, std::abs(s[1]));
      s2 = std::max(s2, std::abs(s[2]));
    }
    // The grid maximum is within a hair of the true sup; keep a 1% margin.
    s1 *= 1.01;
    s2 *= 1.01;
    constexpr double w = CutoffEta::hi - CutoffEta::lo;
    return ProfileBounds{s1 / w, s2 / (w * w), s1, s2};
  }();
  return b;
}

double BumpFunction::c1() const {
  const auto& b = profile_bounds();
  const double m = overlap_;
  const double grad = 4.0 * b.b1 * m * b.a1;
  const double hess = b.b2 * std::pow(4.0 * m * b.a1, 2) + b.b1 * m * (16.0 * b.a2 + 2.0 * b.a1);
  return std::max({1.0, grad, hess});
}

BumpFunction build_bump(const std::vector<Point>& K, double delta) {
  if (K.empty()) throw PreconditionError("build_bump: K is empty");
  std::vector<Point> centers;
  for (const auto& k : K) {
    const bool covered = std::any_of(centers.begin(), centers.end(),
                                     [&](const Point& c) { return (k - c).norm() <= 0.5 * delta; });
    if (!covered) centers.push_back(k);
  }
  return BumpFunction(std::move(centers), delta);
}

double neighbourhood_c0(const std::vector<Point>& K, double delta) {
  double m = 0.0;
  for (const auto& k : K) m = std::max(m, k.norm());
  return 1.1 * (m + 2.0 * delta);
}

double PerturbationSpec::norm_bound() const {
  return std::pow(bump.delta(), k_order) * epsilon / (c0 * c1);
}

FunctionalHandle perturb_functional(const FunctionalHandle& F, const PerturbationSpec& spec) {
  if (spec.y.size() != F.dim() || spec.x0.size() != F.dim() || spec.bump.dim() != F.dim())
    throw DimensionError("perturb_functional: spec dimension does not match the functional");
  const double ny = spec.y.norm();
  if (ny > 0.0 && !(ny < spec.norm_bound()))
    throw PreconditionError("perturb_functional: |y| = " + std::to_string(ny) + " violates the bound " +
                            std::to_string(spec.norm_bound()));
  const auto bump = spec.bump;
  const Point y = spec.y, x0 = spec.x0;
  return {F.label() + "+tilt", F.dim(),
          [=](const Point& x) {
            if (!bump.in_support(x)) return F.value(x);
            return F.value(x) + bump.value(x) * y.dot(x - x0);
          },
          [=](const Point& x) -> Vector {
            if (!bump.in_support(x)) return F.gradient(x);
            return F.gradient(x) + y.dot(x - x0) * bump.gradient(x) + bump.value(x) * y;
          },
          [=](const Point& x) -> Matrix {
            if (!bump.in_support(x)) return F.hessian(x);
            const Vector g = bump.gradient(x);
            return F.hessian(x) + y.dot(x - x0) * bump.hessian(x) + g * y.transpose() + y * g.transpose();
          }};
}

ViscousFamily perturb_family(const ViscousFamily& family, const PerturbationSpec& spec) {
  if (family.is_additive()) return ViscousFamily::additive(perturb_functional(family.base(), spec), *family.regularizer());
  auto fam = family;
  return ViscousFamily::per_sigma(
      family.label() + "+tilt", family.dim(),
      [fam, spec](double s) { return perturb_functional(fam.at(s), spec); },
      [fam](double s, const Point& x) { return fam.d_sigma(s, x); });
}

PerturbationSpec sample_tilt(const std::vector<Point>& K, double delta, double epsilon,
                             unsigned long long seed) {
  if (!(epsilon >= 0.0)) throw DomainError("sample_tilt: epsilon must be nonnegative");
  PerturbationSpec s;
  s.bump = build_bump(K, delta);
  s.K = K;
  s.epsilon = epsilon;
  s.c0 = neighbourhood_c0(K, delta);
  s.c1 = s.bump.c1();
  s.seed = seed;
  const Eigen::Index n = K.front().size();
  s.y = Vector::Zero(n);
  s.x0 = K.front();
  const double bound = s.norm_bound();
  if (bound > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector dir(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = g(rng);
    } while (dir.norm() == 0.0);
    s.y = dir.normalized() * (bound * std::pow(u(rng), 1.0 / static_cast<double>(n)));
  }
  const double ny = s.y.norm();
  if (ny > 0.0) {
    // sup of <y, x> over N_2delta(K) is attained at K_i + 2 delta y/|y|.
    std::size_t best = 0;
    for (std::size_t i = 1; i < K.size(); ++i)
      if (s.y.dot(K[i]) > s.y.dot(K[best])) best = i;
    s.x0 = K[best] + (2.0 * delta / ny) * s.y;
  }
  return s;
}

std::string to_string(CertifyStatus s) {
  switch (s) {
    case CertifyStatus::certified: return "certified";
    case CertifyStatus::failed: return "failed";
    case CertifyStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

NondegeneracyCertificate certify_nondegenerate(const ViscousFamily& family, double sigma,
                                               const std::vector<Point>& K, double delta,
                                               const CertifyOptions& options) {
  if (K.empty()) throw PreconditionError("certify_nondegenerate: empty region");
  const double reach = 2.0 * delta;
  auto in_region = [&](const Point& x) {
    return std::any_of(K.begin(), K.end(), [&](const Point& k) { return (x - k).norm() < reach; });
  };

  std::vector<Point> starts;
  for (std::size_t i = 0; i < K.size() && static_cast<int>(starts.size()) < options.budget; ++i)
    starts.push_back(K[i]);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = K.front().size();
  for (std::size_t i = 0; static_cast<int>(starts.size()) < options.budget; ++i) {
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = g(rng);
    v *= reach * std::pow(u(rng), 1.0 / static_cast<double>(n)) / v.norm();
    starts.push_back(K[i % K.size()] + v);
  }

  struct Outcome {
    std::optional<CriticalPointRecord> rec;
    bool unresolved = false;
  };
  std::vector<Outcome> out(starts.size());
  // A start on a Hessian-singular point stalls the damped Newton merit descent (its merit
  // gradient H g vanishes there), so a failed start is retried from small jitters of its best iterate.
  parallel_for(starts.size(), [&](std::size_t i) {
    std::mt19937_64 jrng(options.seed * 7919 + i);
    std::normal_distribution<double> jg;
    Point x = starts[i];
    for (int attempt = 0; attempt < 4; ++attempt) {
      try {
        out[i].rec = refine(x, family, sigma);
        out[i].unresolved = false;
        return;
      } catch (const RefineError& e) {
        try {
          out[i].unresolved = in_region(e.best()) && family.gradient(sigma, e.best()).norm() < 1e-4;
        } catch (const Error&) {
        }
        Vector v(n);
        for (Eigen::Index j = 0; j < n; ++j) v[j] = jg(jrng);
        x = e.best() + v * (1e-3 * reach / v.norm());
      } catch (const Error&) {
        return;
      }
    }
  });

  NondegeneracyCertificate c;
  c.starts = static_cast<int>(starts.size());
  bool unresolved = false;
  for (const auto& o : out) {
    if (!o.rec) {
      ++c.refine_failures;
      unresolved = unresolved || o.unresolved;
      continue;
    }
    if (!in_region(o.rec->point)) continue;
    const bool dup = std::any_of(c.records.begin(), c.records.end(), [&](const CriticalPointRecord& r) {
      return (r.point - o.rec->point).norm() < options.dedupe;
    });
    if (!dup) c.records.push_back(*o.rec);
  }
  const bool bad = std::any_of(c.records.begin(), c.records.end(), [&](const CriticalPointRecord& r) {
    return r.morse->degenerate() || r.morse->gap < options.gap_tol;
  });
  c.status = bad ? CertifyStatus::failed : (unresolved ? CertifyStatus::inconclusive : CertifyStatus::certified);
  return c;
}

double sigma_stability_radius(double gap, double grad_g_sup) {
  if (!(gap >= 0.0)) throw DomainError("sigma_stability_radius: gap must be nonnegative");
  return grad_g_sup > 0.0 ? gap / (2.0 * grad_g_sup) : kInf;
}

void to_json(nlohmann::json& j, const PerturbationSpec& s) {
  std::vector<std::vector<double>> centers, K;
  for (const auto& c : s.bump.centers()) centers.push_back(flat(c));
  for (const auto& k : s.K) K.push_back(flat(k));
  j = {{"y", flat(s.y)},         {"x0", flat(s.x0)}, {"centers", centers}, {"K", K},
       {"delta", s.bump.delta()}, {"epsilon", s.epsilon}, {"k_order", s.k_order},
       {"c0", s.c0},             {"c1", s.c1},        {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, PerturbationSpec& s) {
  std::vector<Point> centers;
  for (const auto& c : j.at("centers")) centers.push_back(point_of(c.get<std::vector<double>>()));
  s.K.clear();
  for (const auto& k : j.at("K")) s.K.push_back(point_of(k.get<std::vector<double>>()));
  s.bump = BumpFunction(std::move(centers), j.at("delta").get<double>());
  s.y = point_of(j.at("y").get<std::vector<double>>());
  s.x0 = point_of(j.at("x0").get<std::vector<double>>());
  s.epsilon = j.at("epsilon").get<double>();
  s.k_order = j.at("k_order").get<int>();
  s.c0 = j.at("c0").get<double>();
  s.c1 = j.at("c1").get<double>();
  s.seed = j.at("seed").get<unsigned long long>();
}

void to_json(nlohmann::json& j, const NondegeneracyCertificate& c) {
  j = {{"status", to_string(c.status)},
       {"records", c.records},
       {"starts", c.starts},
       {"refine_failures", c.refine_failures}};
}

}  // namespace vmm
