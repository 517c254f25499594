#pragma once

#include <array>

namespace vmm {

/// C-infinity smoothstep S(t) = f(t) / (f(t) + f(1 - t)), f(t) = exp(-1/t) for t > 0, else 0.
/// S = 0 on (-inf, 0], S = 1 on [1, inf), strictly increasing in between. All derivatives bounded.
struct CutoffZeta {
  double operator()(double t) const { return eval(t)[0]; }
  /// (S, S', S'') at t.
  static std::array<double, 3> eval(double t);
};

/// eta(t) = 1 for t <= 9/4, 0 for t >= 4, smooth and nonincreasing in between.
struct CutoffEta {
  static constexpr double lo = 9.0 / 4.0;
  static constexpr double hi = 4.0;
  double operator()(double t) const { return eval(t)[0]; }
  static std::array<double, 3> eval(double t);
};

}  // namespace vmm
