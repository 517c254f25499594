#include "vmm/cutoff.hpp"

#include <cmath>

namespace vmm {

namespace {

// f(t) = exp(-1/t) and its first two derivatives.
std::array<double, 3> f(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  const double e = std::exp(-1.0 / t);
  const double t2 = t * t;
  return {e, e / t2, e * (1.0 - 2.0 * t) / (t2 * t2)};
}

}  // namespace

std::array<double, 3> CutoffZeta::eval(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const auto p = f(t);
  const auto q0 = f(1.0 - t);
  const std::array<double, 3> q{q0[0], -q0[1], q0[2]};  // derivatives of f(1 - t) in t
  const double d = p[0] + q[0], d1 = p[1] + q[1], d2 = p[2] + q[2];
  const double num1 = p[1] * d - p[0] * d1;
  const double s = p[0] / d;
  const double s1 = num1 / (d * d);
  const double s2 = (p[2] * d - p[0] * d2) / (d * d) - 2.0 * d1 * num1 / (d * d * d);
  return {s, s1, s2};
}

std::array<double, 3> CutoffEta::eval(double t) {
  constexpr double w = hi - lo;
  const auto s = CutoffZeta::eval((t - lo) / w);
  return {1.0 - s[0], -s[1] / w, -s[2] / (w * w)};
}

}  // namespace vmm
