#pragma once

#include <array>
#include <functional>
#include <string>

#include "vmm/core.hpp"

namespace vmm {

using Vec3 = Eigen::Vector3d;
using Jac32 = Eigen::Matrix<double, 3, 2>;

/// A parametrized surface (u, v) -> R^3 with its first and second derivatives.
class SurfaceChart {
 public:
  using EmbedFn = std::function<Vec3(double, double)>;
  using JacobianFn = std::function<Jac32(double, double)>;
  /// Second derivatives (P_uu, P_uv, P_vv).
  using SecondFn = std::function<std::array<Vec3, 3>(double, double)>;

  SurfaceChart(std::string label, EmbedFn embed, JacobianFn jacobian, SecondFn second);

  Vec3 embed(double u, double v) const { return embed_(u, v); }
  Jac32 jacobian(double u, double v) const { return jacobian_(u, v); }
  std::array<Vec3, 3> second(double u, double v) const { return second_(u, v); }
  const std::string& label() const noexcept { return label_; }

  /// The same chart composed with a rigid motion x -> R x + t of the ambient space.
  SurfaceChart transformed(const Eigen::Matrix3d& rotation, const Vec3& translation) const;

 private:
  std::string label_;
  EmbedFn embed_;
  JacobianFn jacobian_;
  SecondFn second_;
};

/// P(u, v) = (u, v, 0).
SurfaceChart flat_chart();
/// Torus of center radius R and tube radius r; v = 0 is the outer equator, v = pi the inner one.
SurfaceChart torus_chart(double R, double r);
/// Spheroid with semi-axes (a, a, c); v is the latitude, v = 0 the equator.
SurfaceChart ellipsoid_chart(double a, double c);

/// Discretized loop: N parameter pairs stored as (u_0, v_0, u_1, v_1, ...).
struct LoopConfig {
  int nodes = 0;
  bool closed = true;  ///< closed loop, or an arc whose end nodes are pinned

  Eigen::Index dim() const noexcept { return 2 * static_cast<Eigen::Index>(nodes); }
};

inline constexpr int kMinLoopNodes = 8;

/// F(x) = sum over pos coordinates of s_i x_i^2 - sum over neg coordinates of s_i x_i^2.
/// The negative coordinates come first. `scales` may be empty (all ones).
FunctionalHandle make_quadratic_saddle(int neg, int pos, const Vector& scales = Vector());

/// F(x, y) = (x^2 - 1)^2 + 5 y^2. Minima (+-1, 0), index-1 saddle (0, 0) at level 1.
FunctionalHandle make_double_well();

/// F(x, y) = x^3 - 3 x y^2 + confine (x^2 + y^2)^2.
FunctionalHandle make_monkey_saddle(double confine);

/// F(x, y) = (x^2 + y^2 - 1)^2 + k y^2 with 0 < k < 2: an index-2 maximum at the origin (level 1)
/// and two index-1 passes at (0, +-sqrt(1 - k/2)) at level k - k^2/4.
FunctionalHandle make_planted_saddle(double k);

/// G(x) = sum_i x_i^4.
FunctionalHandle make_quartic(Eigen::Index dim);

/// F(x) + <y, x>.
FunctionalHandle make_linear_tilt(const FunctionalHandle& base, const Vector& y);

/// Polygonal length of the loop in ambient space.
FunctionalHandle make_loop_length(const SurfaceChart& chart, LoopConfig loop);
/// G = sum_i (1 + kappa_i^2)^2 l_i, kappa_i = 2 tan(theta_i / 2) / lbar_i.
FunctionalHandle make_loop_bending(const SurfaceChart& chart, LoopConfig loop);
/// F_sigma = 1/2 sum_i ((1 + |dP_i / h|^2)^(1 + sigma) - 1) h on a closed loop, h = 2 pi / N.
FunctionalHandle make_alpha_energy(int nodes, double sigma, const SurfaceChart& chart);
/// d/dsigma of make_alpha_energy at fixed loop.
double alpha_energy_dsigma(int nodes, double sigma, const SurfaceChart& chart, const Point& loop);
/// The alpha-energies as a per-sigma viscous family.
ViscousFamily make_alpha_family(int nodes, const SurfaceChart& chart);

/// Loop of N nodes tracing the parameter curve t -> (u(t), v(t)), t = 2 pi i / N.
Point sample_loop(int nodes, const std::function<std::array<double, 2>(double)>& curve);
/// Ambient polygon length of a loop (closed), computed without going through a handle.
double ambient_length(const SurfaceChart& chart, const Point& loop, bool closed = true);
/// Cyclic shift of node labels by `shift`.
Point relabel_loop(const Point& loop, int shift);

}  // namespace vmm
