#include "vmm/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/AutoDiff>

namespace vmm {

namespace {

constexpr double kSegmentFloor = 1e-12;

void check_loop(const LoopConfig& loop, const char* who) {
  if (loop.nodes < kMinLoopNodes)
    throw DomainError(std::string(who) + ": need at least " + std::to_string(kMinLoopNodes) +
                      " nodes, got " + std::to_string(loop.nodes));
  if (loop.dim() > kMaxDim) throw DimensionError(std::string(who) + ": too many nodes");
}

std::vector<Vec3> embed_all(const SurfaceChart& chart, const Point& x) {
  const int n = static_cast<int>(x.size() / 2);
  std::vector<Vec3> p(n);
  for (int i = 0; i < n; ++i) p[i] = chart.embed(x[2 * i], x[2 * i + 1]);
  return p;
}

// Sum in sorted order so that cyclic relabelling of the nodes gives a bitwise-equal total.
double relabel_invariant_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

int segment_count(const LoopConfig& loop) { return loop.closed ? loop.nodes : loop.nodes - 1; }

[[noreturn]] void singular(const Point& x, int seg, const std::string& who) {
  std::ostringstream os;
  os << who << ": segment " << seg << " has zero ambient length";
  throw SingularityError(os.str(), x, static_cast<std::size_t>(seg));
}

// Pull back ambient forces dE/dP_i to parameter gradients; pinned arc ends get zero.
Vector pull_back(const SurfaceChart& chart, const Point& x, const std::vector<Vec3>& force,
                 const LoopConfig& loop) {
  Vector g = Vector::Zero(x.size());
  for (int i = 0; i < loop.nodes; ++i) {
    if (!loop.closed && (i == 0 || i == loop.nodes - 1)) continue;
    g.segment<2>(2 * i) = chart.jacobian(x[2 * i], x[2 * i + 1]).transpose() * force[i];
  }
  return g;
}

using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 9, 1>>;
using AD3 = Eigen::Matrix<AD, 3, 1>;

// (1 + kappa^2)^2 lbar at the middle node of the stencil (p0, p1, p2).
template <typename T>
T bending_term(const Eigen::Matrix<T, 3, 1>& p0, const Eigen::Matrix<T, 3, 1>& p1,
               const Eigen::Matrix<T, 3, 1>& p2) {
  using std::sqrt;
  const Eigen::Matrix<T, 3, 1> a = p1 - p0;
  const Eigen::Matrix<T, 3, 1> b = p2 - p1;
  const T la = sqrt(a.squaredNorm());
  const T lb = sqrt(b.squaredNorm());
  const T lbar = 0.5 * (la + lb);
  const T denom = la * lb + a.dot(b);
  const T k2 = 4.0 * a.cross(b).squaredNorm() / (denom * denom * lbar * lbar);
  const T w = 1.0 + k2;
  return w * w * lbar;
}

}  // namespace

SurfaceChart::SurfaceChart(std::string label, EmbedFn embed, JacobianFn jacobian, SecondFn second)
    : label_(std::move(label)),
      embed_(std::move(embed)),
      jacobian_(std::move(jacobian)),
      second_(std::move(second)) {}

SurfaceChart SurfaceChart::transformed(const Eigen::Matrix3d& rotation,
                                       const Vec3& translation) const {
  auto e = embed_;
  auto j = jacobian_;
  auto s = second_;
  return SurfaceChart(
      label_ + "'", [=](double u, double v) -> Vec3 { return rotation * e(u, v) + translation; },
      [=](double u, double v) -> Jac32 { return rotation * j(u, v); },
      [=](double u, double v) {
        auto d = s(u, v);
        for (auto& c : d) c = rotation * c;
        return d;
      });
}

SurfaceChart flat_chart() {
  return SurfaceChart(
      "flat", [](double u, double v) { return Vec3(u, v, 0.0); },
      [](double, double) {
        Jac32 j = Jac32::Zero();
        j(0, 0) = 1.0;
        j(1, 1) = 1.0;
        return j;
      },
      [](double, double) { return std::array<Vec3, 3>{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()}; });
}

SurfaceChart torus_chart(double R, double r) {
  if (!(r > 0.0 && R > r)) throw DomainError("torus_chart: need R > r > 0");
  return SurfaceChart(
      "torus(R=" + std::to_string(R) + ",r=" + std::to_string(r) + ")",
      [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        return Vec3(w * std::cos(u), w * std::sin(u), r * std::sin(v));
      },
      [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        Jac32 j;
        j.col(0) = Vec3(-w * std::sin(u), w * std::cos(u), 0.0);
        j.col(1) = Vec3(-r * std::sin(v) * std::cos(u), -r * std::sin(v) * std::sin(u),
                        r * std::cos(v));
        return j;
      },
      [R, r](double u, double v) {
        const double w = R + r * std::cos(v);
        const double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        return std::array<Vec3, 3>{Vec3(-w * cu, -w * su, 0.0), Vec3(r * sv * su, -r * sv * cu, 0.0),
                                   Vec3(-r * cv * cu, -r * cv * su, -r * sv)};
      });
}

SurfaceChart ellipsoid_chart(double a, double c) {
  if (!(a > 0.0 && c > 0.0)) throw DomainError("ellipsoid_chart: semi-axes must be positive");
  return SurfaceChart(
      "ellipsoid(a=" + std::to_string(a) + ",c=" + std::to_string(c) + ")",
      [a, c](double u, double v) {
        return Vec3(a * std::cos(v) * std::cos(u), a * std::cos(v) * std::sin(u), c * std::sin(v));
      },
      [a, c](double u, double v) {
        Jac32 j;
        j.col(0) = Vec3(-a * std::cos(v) * std::sin(u), a * std::cos(v) * std::cos(u), 0.0);
        j.col(1) = Vec3(-a * std::sin(v) * std::cos(u), -a * std::sin(v) * std::sin(u),
                        c * std::cos(v));
        return j;
      },
      [a, c](double u, double v) {
        const double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        return std::array<Vec3, 3>{Vec3(-a * cv * cu, -a * cv * su, 0.0),
                                   Vec3(a * sv * su, -a * sv * cu, 0.0),
                                   Vec3(-a * cv * cu, -a * cv * su, -c * sv)};
      });
}

FunctionalHandle make_quadratic_saddle(int neg, int pos, const Vector& scales) {
  if (neg < 0 || pos < 0 || neg + pos == 0)
    throw DomainError("quadratic_saddle: need neg, pos >= 0 and neg + pos > 0");
  const int n = neg + pos;
  Vector s = scales.size() == 0 ? Vector::Ones(n) : scales;
  if (s.size() != n) throw DimensionError("quadratic_saddle: expected " + std::to_string(n) + " scales");
  if ((s.array() <= 0.0).any()) throw DomainError("quadratic_saddle: scales must be positive");
  Vector d = s;
  d.head(neg) *= -1.0;
  std::ostringstream label;
  label << "quadratic_saddle(neg=" << neg << ",pos=" << pos << ")";
  return {label.str(), n, [d](const Point& x) { return x.dot(d.cwiseProduct(x)); },
          [d](const Point& x) -> Vector { return 2.0 * d.cwiseProduct(x); },
          [d](const Point&) -> Matrix { return Matrix((2.0 * d).asDiagonal()); }};
}

FunctionalHandle make_double_well() {
  return {"double_well", 2,
          [](const Point& x) {
            const double t = x[0] * x[0] - 1.0;
            return t * t + 5.0 * x[1] * x[1];
          },
          [](const Point& x) -> Vector {
            return Eigen::Vector2d(4.0 * x[0] * (x[0] * x[0] - 1.0), 10.0 * x[1]);
          },
          [](const Point& x) -> Matrix {
            Matrix h = Matrix::Zero(2, 2);
            h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
            h(1, 1) = 10.0;
            return h;
          }};
}

FunctionalHandle make_monkey_saddle(double confine) {
  if (!(confine >= 0.0)) throw DomainError("monkey_saddle: confine must be >= 0");
  return {"monkey_saddle(confine=" + std::to_string(confine) + ")", 2,
          [confine](const Point& p) {
            const double x = p[0], y = p[1], r2 = x * x + y * y;
            return x * x * x - 3.0 * x * y * y + confine * r2 * r2;
          },
          [confine](const Point& p) -> Vector {
            const double x = p[0], y = p[1], r2 = x * x + y * y;
            return Eigen::Vector2d(3.0 * x * x - 3.0 * y * y + 4.0 * confine * r2 * x,
                                   -6.0 * x * y + 4.0 * confine * r2 * y);
          },
          [confine](const Point& p) -> Matrix {
            const double x = p[0], y = p[1], r2 = x * x + y * y;
            Matrix h(2, 2);
            h(0, 0) = 6.0 * x + confine * (4.0 * r2 + 8.0 * x * x);
            h(1, 1) = -6.0 * x + confine * (4.0 * r2 + 8.0 * y * y);
            h(0, 1) = h(1, 0) = -6.0 * y + 8.0 * confine * x * y;
            return h;
          }};
}

FunctionalHandle make_planted_saddle(double k) {
  if (!(k > 0.0 && k < 2.0)) throw DomainError("planted_saddle: need 0 < k < 2");
  return {"planted_saddle(k=" + std::to_string(k) + ")", 2,
          [k](const Point& p) {
            const double t = p.squaredNorm() - 1.0;
            return t * t + k * p[1] * p[1];
          },
          [k](const Point& p) -> Vector {
            const double t = p.squaredNorm() - 1.0;
            return Eigen::Vector2d(4.0 * t * p[0], 4.0 * t * p[1] + 2.0 * k * p[1]);
          },
          [k](const Point& p) -> Matrix {
            const double t = p.squaredNorm() - 1.0;
            Matrix h(2, 2);
            h(0, 0) = 4.0 * t + 8.0 * p[0] * p[0];
            h(1, 1) = 4.0 * t + 8.0 * p[1] * p[1] + 2.0 * k;
            h(0, 1) = h(1, 0) = 8.0 * p[0] * p[1];
            return h;
          }};
}

FunctionalHandle make_quartic(Eigen::Index dim) {
  return {"quartic", dim, [](const Point& x) { return x.array().pow(4).sum(); },
          [](const Point& x) -> Vector { return 4.0 * x.array().cube().matrix(); },
          [](const Point& x) -> Matrix {
            return Matrix((12.0 * x.array().square()).matrix().asDiagonal());
          }};
}

FunctionalHandle make_linear_tilt(const FunctionalHandle& base, const Vector& y) {
  if (y.size() != base.dim()) throw DimensionError("linear_tilt: tilt has wrong dimension");
  return {base.label() + " + <y,x>", base.dim(),
          [base, y](const Point& x) { return base.value(x) + y.dot(x); },
          [base, y](const Point& x) -> Vector { return base.gradient(x) + y; },
          [base](const Point& x) { return base.hessian(x); }};
}

FunctionalHandle make_loop_length(const SurfaceChart& chart, LoopConfig loop) {
  check_loop(loop, "loop_length");
  const std::string label = "loop_length[" + chart.label() + "]";
  auto value = [chart, loop](const Point& x) {
    const auto p = embed_all(chart, x);
    std::vector<double> terms(segment_count(loop));
    for (int s = 0; s < segment_count(loop); ++s) terms[s] = (p[(s + 1) % loop.nodes] - p[s]).norm();
    return relabel_invariant_sum(terms);
  };
  auto gradient = [chart, loop, label](const Point& x) {
    const auto p = embed_all(chart, x);
    std::vector<Vec3> force(loop.nodes, Vec3::Zero());
    for (int s = 0; s < segment_count(loop); ++s) {
      const int t = (s + 1) % loop.nodes;
      const Vec3 e = p[t] - p[s];
      const double l = e.norm();
      if (l < kSegmentFloor) singular(x, s, label);
      force[t] += e / l;
      force[s] -= e / l;
    }
    return pull_back(chart, x, force, loop);
  };
  return FunctionalHandle::with_fd_hessian(label, loop.dim(), value, gradient);
}

FunctionalHandle make_loop_bending(const SurfaceChart& chart, LoopConfig loop) {
  check_loop(loop, "loop_bending");
  const std::string label = "loop_bending[" + chart.label() + "]";
  auto check_segments = [loop, label](const Point& x, const std::vector<Vec3>& p) {
    for (int s = 0; s < segment_count(loop); ++s)
      if ((p[(s + 1) % loop.nodes] - p[s]).norm() < kSegmentFloor) singular(x, s, label);
  };
  auto value = [chart, loop, check_segments](const Point& x) {
    const auto p = embed_all(chart, x);
    check_segments(x, p);
    const int n = loop.nodes;
    std::vector<double> terms(n);
    for (int i = 0; i < n; ++i) {
      if (!loop.closed && (i == 0 || i == n - 1)) {
        terms[i] = 0.5 * (i == 0 ? (p[1] - p[0]).norm() : (p[n - 1] - p[n - 2]).norm());
        continue;
      }
      terms[i] = bending_term<double>(p[(i + n - 1) % n], p[i], p[(i + 1) % n]);
    }
    return relabel_invariant_sum(terms);
  };
  auto gradient = [chart, loop, check_segments](const Point& x) {
    const auto p = embed_all(chart, x);
    check_segments(x, p);
    const int n = loop.nodes;
    std::vector<Vec3> force(n, Vec3::Zero());
    for (int i = 0; i < n; ++i) {
      if (!loop.closed && (i == 0 || i == n - 1)) {
        const Vec3 e = i == 0 ? Vec3(p[1] - p[0]) : Vec3(p[n - 1] - p[n - 2]);
        const Vec3 d = 0.5 * e / e.norm();
        if (i == 0) force[0] -= d, force[1] += d;
        else force[n - 1] += d, force[n - 2] -= d;
        continue;
      }
      const int idx[3] = {(i + n - 1) % n, i, (i + 1) % n};
      AD3 q[3];
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 3; ++c) q[k][c] = AD(p[idx[k]][c], 9, 3 * k + c);
      const AD t = bending_term<AD>(q[0], q[1], q[2]);
      for (int k = 0; k < 3; ++k) force[idx[k]] += t.derivatives().segment<3>(3 * k);
    }
    return pull_back(chart, x, force, loop);
  };
  return FunctionalHandle::with_fd_hessian(label, loop.dim(), value, gradient);
}

FunctionalHandle make_alpha_energy(int nodes, double sigma, const SurfaceChart& chart) {
  const LoopConfig loop{nodes, true};
  check_loop(loop, "alpha_energy");
  if (!(sigma >= 0.0 && std::isfinite(sigma))) throw DomainError("alpha_energy: sigma must be >= 0");
  const double h = 2.0 * std::numbers::pi / nodes;
  auto value = [chart, nodes, sigma, h](const Point& x) {
    const auto p = embed_all(chart, x);
    std::vector<double> terms(nodes);
    for (int i = 0; i < nodes; ++i) {
      const double s = (p[(i + 1) % nodes] - p[i]).squaredNorm() / (h * h);
      terms[i] = (std::pow(1.0 + s, 1.0 + sigma) - 1.0) * h;
    }
    return 0.5 * relabel_invariant_sum(terms);
  };
  auto gradient = [chart, loop, sigma, h](const Point& x) {
    const int n = loop.nodes;
    const auto p = embed_all(chart, x);
    std::vector<Vec3> force(n, Vec3::Zero());
    for (int i = 0; i < n; ++i) {
      const Vec3 d = p[(i + 1) % n] - p[i];
      const double s = d.squaredNorm() / (h * h);
      const Vec3 f = (1.0 + sigma) * std::pow(1.0 + s, sigma) * d / h;
      force[(i + 1) % n] += f;
      force[i] -= f;
    }
    return pull_back(chart, x, force, loop);
  };
  std::ostringstream label;
  label << "alpha_energy[" << chart.label() << "](sigma=" << sigma << ")";
  return FunctionalHandle::with_fd_hessian(label.str(), loop.dim(), value, gradient);
}

double alpha_energy_dsigma(int nodes, double sigma, const SurfaceChart& chart, const Point& loop) {
  if (loop.size() != 2 * nodes) throw DimensionError("alpha_energy_dsigma: loop has wrong size");
  const double h = 2.0 * std::numbers::pi / nodes;
  const auto p = embed_all(chart, loop);
  double d = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double s = (p[(i + 1) % nodes] - p[i]).squaredNorm() / (h * h);
    d += std::pow(1.0 + s, 1.0 + sigma) * std::log1p(s) * h;
  }
  return 0.5 * d;
}

ViscousFamily make_alpha_family(int nodes, const SurfaceChart& chart) {
  return ViscousFamily::per_sigma(
      "alpha_energy[" + chart.label() + "]", 2 * static_cast<Eigen::Index>(nodes),
      [nodes, chart](double sigma) { return make_alpha_energy(nodes, sigma, chart); },
      [nodes, chart](double sigma, const Point& x) {
        return alpha_energy_dsigma(nodes, sigma, chart, x);
      });
}

Point sample_loop(int nodes, const std::function<std::array<double, 2>(double)>& curve) {
  Point x(2 * nodes);
  for (int i = 0; i < nodes; ++i) {
    const auto uv = curve(2.0 * std::numbers::pi * i / nodes);
    x[2 * i] = uv[0];
    x[2 * i + 1] = uv[1];
  }
  return x;
}

double ambient_length(const SurfaceChart& chart, const Point& loop, bool closed) {
  const auto p = embed_all(chart, loop);
  const int n = static_cast<int>(p.size());
  double len = 0.0;
  for (int i = 0; i + 1 < n; ++i) len += (p[i + 1] - p[i]).norm();
  if (closed && n > 1) len += (p[0] - p[n - 1]).norm();
  return len;
}

Point relabel_loop(const Point& loop, int shift) {
  const int n = static_cast<int>(loop.size() / 2);
  Point out(loop.size());
  for (int i = 0; i < n; ++i) {
    const int j = ((i + shift) % n + n) % n;
    out.segment<2>(2 * i) = loop.segment<2>(2 * j);
  }
  return out;
}

}  // namespace vmm
