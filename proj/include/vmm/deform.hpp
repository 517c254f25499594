#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "vmm/cutoff.hpp"
#include "vmm/sweepout.hpp"

namespace vmm {

/// Chart coordinates split into the negative and positive eigen-blocks.
struct ChartPoint {
  Vector neg;
  Vector pos;
};

/// delta = (r2^2 - 4 r1^2) / 2, the fitting rule. Throws DomainError unless 0 < 2 r1 < r2.
double chart_delta(double r1, double r2);
/// r2^2 - 4 r1^2.
double chart_delta_bound(double r1, double r2);

struct ChartOptions {
  double max_radius = 1.0;  ///< cap on the validity radius
  int samples = 256;        ///< random sample points per bisection trial
  int bisection_steps = 30;
  unsigned long long seed = 7;
  ToleranceProfile tol;
};

/// Rescaled eigen-chart at a non-degenerate critical point x*.
///
/// With c = V^T (x - x*) split as (a, b), the chart is
///   z- = S- a / sqrt(2),  z+ = S+ (b - b*(a)) / sqrt(2),
/// where S = |lambda|^(1/2) and b*(a) minimises F_sigma over the positive fibre through a.
/// The model is level + |z+|^2 - |z-|^2. Along each fibre F_sigma is convex inside the
/// validity radius, so shrinking z+ never raises F_sigma.
class MorseChart {
 public:
  const Point& center() const noexcept { return center_; }
  double level() const noexcept { return level_; }
  double sigma() const noexcept { return sigma_; }
  int index() const noexcept { return index_; }
  Eigen::Index dim() const noexcept { return center_.size(); }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  /// Eigenvectors as columns, negative block first.
  const Matrix& basis() const noexcept { return basis_; }
  Matrix neg_basis() const { return basis_.leftCols(index_); }
  Matrix pos_basis() const { return basis_.rightCols(dim() - index_); }
  Vector scales() const { return eigenvalues_.cwiseAbs().cwiseSqrt(); }
  double r1() const noexcept { return r1_; }
  double r2() const noexcept { return r2_; }
  double delta() const noexcept { return delta_; }
  double validity_radius() const noexcept { return validity_; }
  /// True when no fibre correction is needed (family absent or exact quadratic).
  bool linear() const noexcept { return !family_; }

  ChartPoint to_chart(const Point& x) const;
  Point from_chart(const ChartPoint& z) const;
  /// level + |z+|^2 - |z-|^2.
  double model(const ChartPoint& z) const;
  /// Inside C(s, t) = {|z-| <= s, |z+| <= t}; `open` tests the interior.
  bool in_cylinder(const ChartPoint& z, double s, double t, bool open = false) const;

  /// Same chart with explicit radii; delta follows the fitting rule.
  MorseChart with_radii(double r1, double r2) const;

  /// Pure linear chart from an explicit Hessian (no fibre correction).
  static MorseChart normal_form(Point center, double level, const Matrix& hessian, double r1,
                                double r2, const ToleranceProfile& tol = {});

  friend MorseChart build_chart(const CriticalPointRecord&, const ViscousFamily&, double,
                                const ChartOptions&);
  friend void from_json(const nlohmann::json&, MorseChart&);

 private:
  Vector fibre_min(const Vector& a) const;
  void set_radii(double r1, double r2);

  Point center_;
  double level_ = 0.0;
  double sigma_ = 0.0;
  int index_ = 0;
  Vector eigenvalues_;
  Matrix basis_;
  double r1_ = 0.0, r2_ = 0.0, delta_ = 0.0, validity_ = 0.0;
  std::shared_ptr<const ViscousFamily> family_;
};

/// Chart at a refined record. Throws PreconditionError for degenerate or missing Morse data.
MorseChart build_chart(const CriticalPointRecord& record, const ViscousFamily& family, double sigma,
                       const ChartOptions& options = {});

/// Largest sampled |F_sigma - model| over the chart ball of radius rho.
double chart_model_error(const MorseChart& chart, const ViscousFamily& family, double rho,
                         int samples = 256, unsigned long long seed = 11);

/// Phi(x) = phi^-1(zeta(|z-|/r1 - 1) z+ + z-) on C(2 r1, r2), identity elsewhere.
Point deform_phi(const Point& x, const MorseChart& chart, const CutoffZeta& zeta = {});

struct SurgeryReport {
  std::string kind;
  double sup_before = 0.0;
  double sup_after = 0.0;
  int frames_moved = 0;
  int frames_projected = 0;
  int frames_deleted = 0;
  int draws = 0;
  Vector missed_point;  ///< in negative chart coordinates, empty when unused
  double min_center_distance = 0.0;  ///< smallest chart-coordinate norm over the output frames
};

struct SurgeryOptions {
  int max_draws = 1000;
  unsigned long long seed = 1;
};

/// Lazer-Solimini surgery for index > d. Throws PreconditionError when index <= d or the sup
/// exceeds level + delta, and Error when no missed point is found.
Sweepout surgery_admissible(const Sweepout& sweepout, const MorseChart& chart,
                            const ViscousFamily& family, double sigma,
                            SurgeryReport* report = nullptr, const SurgeryOptions& options = {});

/// Dual surgery for index < d: Phi, then delete the frames in int C(r1, r2).
Sweepout surgery_dual(const Sweepout& pointset, const MorseChart& chart, const ViscousFamily& family,
                      double sigma, SurgeryReport* report = nullptr);

enum class FamilyKind { admissible, dual, codual };

FamilyKind parse_family_kind(const std::string& s);
std::string to_string(FamilyKind k);

bool certify_index_bound(const CriticalPointRecord& record, int d, FamilyKind kind);

void to_json(nlohmann::json& j, const MorseChart& c);
void from_json(const nlohmann::json& j, MorseChart& c);
void to_json(nlohmann::json& j, const SurgeryReport& r);
void from_json(const nlohmann::json& j, SurgeryReport& r);

}  // namespace vmm
