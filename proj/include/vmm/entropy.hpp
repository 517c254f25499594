#pragma once

#include <utility>
#include <vector>

#include "json.hpp"

#include "vmm/sweepout.hpp"

namespace vmm {

/// a_j = 1/j, b_j = 1/((j+1) log j loglog j logloglog j), delta_j = 1/logloglog j for j >= J_start.
/// Each iterated logarithm is floored at `log_floor` so that small j stay finite.
struct EntropySchedule {
  int J_start = 16;
  double log_floor = 1e-3;

  double a(int j) const;
  double b(int j) const;
  double delta(int j) const;
  /// I_j = [a_{j+1}, a_j].
  std::pair<double, double> interval(int j) const { return {a(j + 1), a(j)}; }
  /// b_j for j = J_start .. J_start + count - 1.
  std::vector<double> b_prefix(int count) const;
};

struct EntropyCertificate {
  double sigma = 0.0;
  double beta_prime_est = 0.0;
  double bound = 0.0;
  double slack = 0.0;  ///< bound - beta_prime_est
  std::vector<double> stencil;

  bool accepted() const noexcept { return slack >= 0.0; }
};

/// (beta(sigma + window) - beta(sigma)) / window on the isotonic curve. The window must reach
/// at least two grid points beyond sigma and stay inside the grid.
double beta_prime_estimate(const WidthCurve& curve, double sigma, double window);

/// Certificates for every grid sigma in (0, e^{-e}) that has `window_steps` grid points ahead
/// of it, accepted or not. The window is the distance to the grid point `window_steps` ahead.
std::vector<EntropyCertificate> entropy_certificates(const WidthCurve& curve, int window_steps = 2);

/// The accepted subset of entropy_certificates: beta' estimate <= entropy_bound(sigma).
std::vector<EntropyCertificate> select_entropy_sigmas(const WidthCurve& curve, int window_steps = 2);

/// Length fraction of I_j on which the sampled slope of beta stays below
/// 1/(a_j log(1/a_j) loglog(1/a_j)). Needs at least 16 samples in I_j.
double good_interval_fraction(const WidthCurve& curve, const EntropySchedule& schedule, int j);

/// min over the first `prefix` terms of increments[k] / b[k].
double liminf_ratio_check(const std::vector<double>& increments, const std::vector<double>& b,
                          int prefix);

/// Indices k < prefix with increments[k] <= b[k].
std::vector<int> accepted_indices(const std::vector<double>& increments, const std::vector<double>& b,
                                  int prefix);

void to_json(nlohmann::json& j, const EntropyCertificate& c);
void from_json(const nlohmann::json& j, EntropyCertificate& c);

}  // namespace vmm
