#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vmm/sweepout.hpp"

namespace vmm {

/// Eigendecomposition of a symmetric matrix classified by the nullity band of `tol`.
MorseData morse_data_of(const Matrix& hessian, const ToleranceProfile& tol = {});

/// Morse data of F_sigma at x.
MorseData morse_data(const Point& x, const ViscousFamily& family, double sigma,
                     const ToleranceProfile& tol = {});

struct RefineOptions {
  double tol_grad = 1e-9;
  int budget = 200;
  double norm_bound = 1e3;  ///< divergence once |x| exceeds this
  ToleranceProfile tol;
};

/// refine did not reach the gradient tolerance.
class RefineError : public Error {
 public:
  RefineError(const std::string& what, Point best, std::vector<double> trace)
      : Error(what), best_(std::move(best)), trace_(std::move(trace)) {}
  const Point& best() const noexcept { return best_; }
  /// Gradient norm after every accepted iteration.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  Point best_;
  std::vector<double> trace_;
};

/// Levenberg-damped Newton iteration on grad F_sigma = 0, followed by Morse data.
CriticalPointRecord refine(const Point& x0, const ViscousFamily& family, double sigma,
                           const RefineOptions& options = {});

struct NearCriticalCertificate {
  Point point;
  double sigma = 0.0;
  double sigma_k = 0.0;
  double beta_prime = 0.0;  ///< the estimate delta_k was computed from
  double delta_k = 0.0;
  double dist_to_sweepout = 0.0;
  double value = 0.0;  ///< F_sigma(point)
  std::pair<double, double> value_bracket{0.0, 0.0};
  double grad_norm = 0.0;
  double base_value = 0.0;  ///< F(point)
  bool base_floor_ok = false;   ///< F(point) >= 3/4 beta(0)
  bool sigma_small_ok = false;  ///< sigma <= exp(-4 / beta(0))
  int seed_frame = -1;

  bool holds() const noexcept {
    return grad_norm <= delta_k && dist_to_sweepout <= delta_k && value_bracket.first <= value &&
           value <= value_bracket.second;
  }
};

/// sqrt(2 (beta' + 2) (sigma_k - sigma)).
double near_critical_radius(double beta_prime, double sigma, double sigma_k);

/// No point satisfying the certificate was found; carries the best attempt.
class LocateError : public Error {
 public:
  LocateError(const std::string& what, NearCriticalCertificate best)
      : Error(what), best_(std::move(best)) {}
  const NearCriticalCertificate& best() const noexcept { return best_; }

 private:
  NearCriticalCertificate best_;
};

struct LocateOptions {
  double seed_fraction = 0.05;  ///< top fraction of frames used as seeds
  int budget = 100;             ///< damped-Newton iterations per seed
  std::optional<double> beta_prime;  ///< default: (beta(sigma_k) - beta(sigma)) / (sigma_k - sigma)
};

/// Near-critical point of F_sigma close to a sweepout that is near-optimal at sigma_k.
NearCriticalCertificate locate_near_critical(const Sweepout& sweepout, const ViscousFamily& family,
                                             double sigma, double sigma_k, const WidthCurve& curve,
                                             const LocateOptions& options = {});

/// Ind(limit) <= min Ind over the tail and Ind + Null(limit) >= max Ind + Null over the tail.
bool index_semicontinuity_check(const std::vector<CriticalPointRecord>& tail,
                                const CriticalPointRecord& limit);

void to_json(nlohmann::json& j, const MorseData& m);
void from_json(const nlohmann::json& j, MorseData& m);
void to_json(nlohmann::json& j, const CriticalPointRecord& r);
void from_json(const nlohmann::json& j, CriticalPointRecord& r);
void to_json(nlohmann::json& j, const NearCriticalCertificate& c);
void from_json(const nlohmann::json& j, NearCriticalCertificate& c);

}  // namespace vmm
