#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vmm/core.hpp"

namespace vmm {

inline constexpr int kMinPathFrames = 16;

/// A discretized d-parameter family of points with frozen boundary frames.
///
/// d = 1: frames[0..M) along a path. d = 2: an M x M2 grid stored row-major.
struct Sweepout {
  int d = 1;
  int M = 0;
  int M2 = 1;
  std::vector<Point> frames;
  std::vector<bool> boundary;

  Eigen::Index dim() const { return frames.empty() ? 0 : frames.front().size(); }
  std::size_t size() const noexcept { return frames.size(); }

  /// Path with its two end frames frozen.
  static Sweepout path(std::vector<Point> frames);
  /// M equally spaced frames on the segment [a, b].
  static Sweepout straight_line(const Point& a, const Point& b, int M);
  /// M x M2 grid with the outer ring frozen.
  static Sweepout grid(std::vector<Point> frames, int M, int M2);

  /// Throws PreconditionError when the shape, mask or coordinates are inconsistent.
  /// `min_frames` is skipped for point sets produced by dual surgery.
  void validate(bool min_frames = true) const;
};

/// max_i F_sigma(frame_i) and its lowest argmax. Evaluation errors name the frame.
std::pair<double, int> sup_over(const Sweepout& sweepout, const ViscousFamily& family, double sigma);

/// F_sigma at every frame, evaluated in parallel.
std::vector<double> frame_values(const Sweepout& sweepout, const ViscousFamily& family, double sigma);

/// Largest F_sigma over the frozen frames.
double boundary_value(const Sweepout& sweepout, const ViscousFamily& family, double sigma);

struct TightenOptions {
  double temperature_frac = 0.05;  ///< tau = temperature_frac * (sup - min)
  double initial_step = 0.1;
  double armijo = 1e-4;
  int max_backtracks = 40;
  bool reparametrize = true;
  bool project_tangent = true;  ///< descend only across the family (string-method step)
  double stop_grad = 0.0;  ///< stop early once the weighted max-frame gradient is below this
};

struct TightenResult {
  Sweepout sweepout;
  int iterations = 0;
  int line_search_failures = 0;
  int reparam_rejected = 0;
  double sup_before = 0.0;
  double sup_after = 0.0;
};

/// Smoothed-max descent of the interior frames. Never raises the sup; boundary frames are
/// returned bit-identical.
TightenResult tighten(const Sweepout& sweepout, const ViscousFamily& family, double sigma,
                      int budget, const TightenOptions& options = {});

/// Redistribute interior frames of a path to equal chord spacing (linear interpolation).
Sweepout equalize_spacing(const Sweepout& sweepout);

struct WidthCurve {
  std::vector<double> sigmas;
  std::vector<double> betas;      ///< after isotonic correction
  std::vector<double> raw_betas;  ///< sup after tightening, before correction
  std::vector<int> argmax_frames;
  std::vector<Sweepout> tightened;  ///< empty unless retained

  std::size_t size() const noexcept { return sigmas.size(); }
  /// beta at sigma = sigmas[i] by linear interpolation; throws outside the grid.
  double beta_at(double sigma) const;
};

/// Least-squares nondecreasing fit (pool adjacent violators), optional weights.
std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w = {});

WidthCurve estimate_width_curve(const Sweepout& seed, const ViscousFamily& family,
                                const std::vector<double>& sigma_grid, int budget,
                                bool keep_sweepouts = false, const TightenOptions& options = {});

/// beta(0) > boundary_value + margin, using the first grid point (which should be sigma = 0).
bool check_nontrivial(const WidthCurve& curve, double boundary_value, double margin);

/// n points geometric between lo and hi inclusive; lo = 0 is kept as an extra leading 0 only
/// when `with_zero` is set.
std::vector<double> geometric_grid(double lo, double hi, int n, bool with_zero = false);

void to_json(nlohmann::json& j, const Sweepout& s);
void from_json(const nlohmann::json& j, Sweepout& s);
void to_json(nlohmann::json& j, const WidthCurve& c);
void from_json(const nlohmann::json& j, WidthCurve& c);

/// CSV columns sigma,beta,argmax.
void write_width_csv(std::ostream& os, const WidthCurve& curve);

}  // namespace vmm
