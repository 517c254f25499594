#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "vmm/core.hpp"

namespace vmm {

/// phi(x) = zeta(sum_i eta(|x - x_i|^2 / delta^2)): 1 on N_delta(K), 0 outside N_2delta(K).
class BumpFunction {
 public:
  BumpFunction() = default;
  BumpFunction(std::vector<Point> centers, double delta);

  const std::vector<Point>& centers() const noexcept { return centers_; }
  double delta() const noexcept { return delta_; }
  Eigen::Index dim() const { return centers_.empty() ? 0 : centers_.front().size(); }

  double value(const Point& x) const;
  Vector gradient(const Point& x) const;
  Matrix hessian(const Point& x) const;
  /// True when x is within 2 delta of some center (where phi may be nonzero).
  bool in_support(const Point& x) const;

  /// Largest number of centers whose supports can overlap at one point.
  int overlap() const noexcept { return overlap_; }
  /// C1 with |phi|_{C^2} <= C1 / delta^2 for delta <= 1.
  double c1() const;

 private:
  struct Parts {
    double s = 0.0;
    Vector ds;
    Matrix d2s;
  };
  Parts sum(const Point& x, int order) const;

  std::vector<Point> centers_;
  double delta_ = 0.0;
  int overlap_ = 0;
};

/// Greedy sub-cover of K by balls of radius delta / 2 centred at points of K.
BumpFunction build_bump(const std::vector<Point>& K, double delta);

/// Sup-norms of eta', eta'', zeta', zeta'' on their transition intervals.
struct ProfileBounds {
  double a1, a2, b1, b2;
};
const ProfileBounds& profile_bounds();

struct PerturbationSpec {
  Point y;
  Point x0;
  BumpFunction bump;
  std::vector<Point> K;
  double epsilon = 0.0;
  int k_order = 2;
  double c0 = 0.0;  ///< 1.1 sup |x| over N_2delta(K)
  double c1 = 0.0;
  unsigned long long seed = 0;

  /// delta^k epsilon / (C0 C1).
  double norm_bound() const;
};

/// 1.1 (max_i |K_i| + 2 delta).
double neighbourhood_c0(const std::vector<Point>& K, double delta);

/// F(x) + phi(x) <y, x - x0>, with product-rule derivatives. Exactly F outside the support.
/// Throws PreconditionError when |y| breaks the norm bound.
FunctionalHandle perturb_functional(const FunctionalHandle& F, const PerturbationSpec& spec);

/// The same tilt applied to every member of a family.
ViscousFamily perturb_family(const ViscousFamily& family, const PerturbationSpec& spec);

/// y uniform in the ball of radius norm_bound; x0 maximises <y, x> over N_2delta(K), so the
/// perturbed functional never exceeds F.
PerturbationSpec sample_tilt(const std::vector<Point>& K, double delta, double epsilon,
                             unsigned long long seed);

enum class CertifyStatus { certified, failed, inconclusive };
std::string to_string(CertifyStatus s);

struct NondegeneracyCertificate {
  CertifyStatus status = CertifyStatus::inconclusive;
  std::vector<CriticalPointRecord> records;
  int starts = 0;
  int refine_failures = 0;

  bool certified() const noexcept { return status == CertifyStatus::certified; }
};

struct CertifyOptions {
  double gap_tol = 1e-6;
  int budget = 32;  ///< multi-start count
  unsigned long long seed = 3;
  double dedupe = 1e-6;
};

/// Multi-start refinement inside N_2delta(K) and a spectral-gap test on every point found.
NondegeneracyCertificate certify_nondegenerate(const ViscousFamily& family, double sigma,
                                               const std::vector<Point>& K, double delta,
                                               const CertifyOptions& options = {});

/// Width of the sigma-window on which a non-degenerate point stays non-degenerate:
/// gap / (2 sup |grad G|).
double sigma_stability_radius(double gap, double grad_g_sup);

void to_json(nlohmann::json& j, const PerturbationSpec& s);
void from_json(const nlohmann::json& j, PerturbationSpec& s);
void to_json(nlohmann::json& j, const NondegeneracyCertificate& c);

}  // namespace vmm
