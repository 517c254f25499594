#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the coordinate space. Dense, Euclidean inner product.
using Point = Eigen::VectorXd;

/// Largest coordinate dimension for which dense Hessians are materialized.
inline constexpr Eigen::Index kMaxDim = 2000;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A functional produced a non-finite value. Carries the offending point.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Point at) : Error(what), point_(std::move(at)) {}
  const Point& point() const noexcept { return point_; }

 private:
  Point point_;
};

/// Two consecutive loop nodes coincide in the ambient space.
class SingularityError : public EvaluationError {
 public:
  SingularityError(const std::string& what, Point at, std::size_t segment)
      : EvaluationError(what, std::move(at)), segment_(segment) {}
  std::size_t segment() const noexcept { return segment_; }

 private:
  std::size_t segment_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numerical tolerances shared by the whole run.
struct ToleranceProfile {
  double grad = 1e-9;          ///< target gradient norm for refined critical points
  double null_rel = 1e-7;      ///< nullity band, relative to the spectral norm of the Hessian
  double null_abs = 1e-12;     ///< absolute floor of the nullity band
  double gap = 1e-6;           ///< spectral gap required to certify non-degeneracy
  double fd_step = 1e-6;       ///< step of finite-difference Hessians
  double reverify = 1e-9;      ///< tolerance when re-verifying emitted records

  /// Nullity band for a Hessian of spectral norm `spectral_norm`.
  double null_band(double spectral_norm) const noexcept {
    const double rel = null_rel * spectral_norm;
    return rel > null_abs ? rel : null_abs;
  }
};

inline bool all_finite(const Vector& v) noexcept { return v.allFinite(); }

}  // namespace vmm
