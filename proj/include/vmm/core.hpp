#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "vmm/types.hpp"

namespace vmm {

/// An energy on a coordinate space of fixed dimension, with first and second derivatives.
///
/// Evaluators must be pure: the handle is shared between worker threads and never mutated
/// after construction. Every call checks the dimension of its argument and the finiteness of
/// the result, so a broken functional surfaces as an EvaluationError carrying the point.
class FunctionalHandle {
 public:
  using ValueFn = std::function<double(const Point&)>;
  using GradientFn = std::function<Vector(const Point&)>;
  using HessianFn = std::function<Matrix(const Point&)>;

  FunctionalHandle(std::string label, Eigen::Index dim, ValueFn value, GradientFn gradient,
                   HessianFn hessian);

  /// Handle whose Hessian is the symmetrized central difference of the analytic gradient.
  static FunctionalHandle with_fd_hessian(std::string label, Eigen::Index dim, ValueFn value,
                                          GradientFn gradient, double step = 1e-6);

  double value(const Point& x) const;
  Vector gradient(const Point& x) const;
  Matrix hessian(const Point& x) const;

  const std::string& label() const noexcept { return label_; }
  Eigen::Index dim() const noexcept { return dim_; }

 private:
  void check_dim(const Point& x) const;

  std::string label_;
  Eigen::Index dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

/// Central-difference Hessian of `gradient`, symmetrized.
Matrix fd_hessian(const std::function<Vector(const Point&)>& gradient, const Point& x,
                  double step);

/// The one-parameter family F_sigma used by the min-max machinery.
///
/// The additive kind is F + sigma^2 G. The per-sigma kind wraps energies whose viscosity
/// enters non-additively (the alpha-energy); for those the regularization term is taken as
/// (sigma/2) dF_sigma/dsigma, which coincides with sigma^2 G in the additive case.
class ViscousFamily {
 public:
  using AtSigmaFn = std::function<FunctionalHandle(double)>;
  using SigmaDerivativeFn = std::function<double(double, const Point&)>;

  static ViscousFamily additive(FunctionalHandle base, FunctionalHandle regularizer);
  static ViscousFamily per_sigma(std::string label, Eigen::Index dim, AtSigmaFn at,
                                 SigmaDerivativeFn d_sigma);

  double value(double sigma, const Point& x) const;
  Vector gradient(double sigma, const Point& x) const;
  Matrix hessian(double sigma, const Point& x) const;

  /// dF_sigma/dsigma at x.
  double d_sigma(double sigma, const Point& x) const;
  /// sigma^2 G(x) for additive families, (sigma/2) dF_sigma/dsigma otherwise.
  double reg_term(double sigma, const Point& x) const;
  /// G(x) for additive families; the G-equivalent reg_term / sigma^2 otherwise.
  double reg_value(double sigma, const Point& x) const;
  double base_value(const Point& x) const { return value(0.0, x); }

  /// F_sigma as a standalone handle.
  FunctionalHandle at(double sigma) const;

  bool is_additive() const noexcept { return regularizer_.has_value(); }
  const FunctionalHandle& base() const { return *base_; }
  const std::optional<FunctionalHandle>& regularizer() const noexcept { return regularizer_; }
  const std::string& label() const noexcept { return label_; }
  Eigen::Index dim() const noexcept { return dim_; }

 private:
  ViscousFamily() = default;

  std::string label_;
  Eigen::Index dim_ = 0;
  std::optional<FunctionalHandle> base_;
  std::optional<FunctionalHandle> regularizer_;
  AtSigmaFn at_;
  SigmaDerivativeFn d_sigma_;
};

/// F(x) + sigma^2 G(x).
double evaluate_viscous(const ViscousFamily& family, double sigma, const Point& x);

enum class EntropyForm {
  derivative,  ///< 1 / (sigma log(1/sigma) loglog(1/sigma)), the bound on beta'(sigma)
  membership,  ///< 1 / (log(1/sigma) loglog(1/sigma)), the bound on sigma^2 G(x)
};

/// exp(-e): above it loglog(1/sigma) is no longer positive.
inline const double kEntropySigmaMax = std::exp(-std::exp(1.0));

/// Entropy bound at sigma in (0, exp(-e)). Throws DomainError outside.
double entropy_bound(double sigma, EntropyForm form = EntropyForm::derivative);

/// sigma^2 G(x) - 1/(log(1/sigma) loglog(1/sigma)). Non-positive iff x lies in the entropy set.
/// Zero at sigma = 0, +inf where the bound is undefined.
double entropy_residual(double sigma, double reg_term);

/// max_i |central difference of F along e_i - gradient_i|.
double grad_check(const FunctionalHandle& handle, const Point& x, double h);
/// max_ij |central difference of gradient_i along e_j - H_ij|.
double hessian_check(const FunctionalHandle& handle, const Point& x, double h);

/// Spectral data of a Hessian, classified with a nullity band.
struct MorseData {
  Vector eigenvalues;     ///< ascending
  Matrix eigenvectors;    ///< columns match `eigenvalues`
  int index = 0;          ///< eigenvalues below -tol_null
  int nullity = 0;        ///< eigenvalues inside [-tol_null, tol_null]
  double gap = 0.0;       ///< smallest |lambda| outside the band (inf when none)
  double tol_null = 0.0;

  int positive() const noexcept { return static_cast<int>(eigenvalues.size()) - index - nullity; }
  bool degenerate() const noexcept { return nullity > 0; }
  Matrix neg_basis() const { return eigenvectors.leftCols(index); }
  Matrix pos_basis() const { return eigenvectors.rightCols(positive()); }
};

/// A critical point of F_sigma together with the quantities the index theorems talk about.
struct CriticalPointRecord {
  Point point;
  double sigma = 0.0;
  double value = 0.0;       ///< F_sigma(x)
  double base_value = 0.0;  ///< F(x)
  double reg_value = 0.0;   ///< G(x)
  double grad_norm = 0.0;
  std::optional<MorseData> morse;
  double entropy_residual = 0.0;

  bool in_entropy_set() const noexcept { return entropy_residual <= 0.0; }
};

/// Fill every scalar field of a record at x from the family.
CriticalPointRecord make_record(const ViscousFamily& family, double sigma, const Point& x);

}  // namespace vmm
