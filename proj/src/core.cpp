#include "vmm/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace vmm {

namespace {

std::string describe(const Point& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < x.size() && i < 8; ++i) os << (i ? ", " : "") << x[i];
  if (x.size() > 8) os << ", ...";
  os << ")";
  return os.str();
}

}  // namespace

FunctionalHandle::FunctionalHandle(std::string label, Eigen::Index dim, ValueFn value,
                                   GradientFn gradient, HessianFn hessian)
    : label_(std::move(label)),
      dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  if (dim_ <= 0 || dim_ > kMaxDim)
    throw DimensionError(label_ + ": dimension " + std::to_string(dim_) + " outside [1, " +
                         std::to_string(kMaxDim) + "]");
}

FunctionalHandle FunctionalHandle::with_fd_hessian(std::string label, Eigen::Index dim,
                                                   ValueFn value, GradientFn gradient,
                                                   double step) {
  auto hess = [gradient, step](const Point& x) { return fd_hessian(gradient, x, step); };
  return {std::move(label), dim, std::move(value), std::move(gradient), std::move(hess)};
}

void FunctionalHandle::check_dim(const Point& x) const {
  if (x.size() != dim_)
    throw DimensionError(label_ + ": point of dimension " + std::to_string(x.size()) +
                         ", expected " + std::to_string(dim_));
}

double FunctionalHandle::value(const Point& x) const {
  check_dim(x);
  const double v = value_(x);
  if (!std::isfinite(v)) throw EvaluationError(label_ + ": non-finite value at " + describe(x), x);
  return v;
}

Vector FunctionalHandle::gradient(const Point& x) const {
  check_dim(x);
  Vector g = gradient_(x);
  if (g.size() != dim_) throw DimensionError(label_ + ": gradient has wrong size");
  if (!g.allFinite())
    throw EvaluationError(label_ + ": non-finite gradient at " + describe(x), x);
  return g;
}

Matrix FunctionalHandle::hessian(const Point& x) const {
  check_dim(x);
  Matrix h = hessian_(x);
  if (h.rows() != dim_ || h.cols() != dim_)
    throw DimensionError(label_ + ": Hessian has wrong shape");
  if (!h.allFinite()) throw EvaluationError(label_ + ": non-finite Hessian at " + describe(x), x);
  return h;
}

Matrix fd_hessian(const std::function<Vector(const Point&)>& gradient, const Point& x,
                  double step) {
  const Eigen::Index n = x.size();
  Matrix h(n, n);
  Point xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = x[j];
    xp[j] = xj + step;
    const Vector gp = gradient(xp);
    xp[j] = xj - step;
    const Vector gm = gradient(xp);
    xp[j] = xj;
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

ViscousFamily ViscousFamily::additive(FunctionalHandle base, FunctionalHandle regularizer) {
  if (base.dim() != regularizer.dim())
    throw DimensionError("viscous family: F has dimension " + std::to_string(base.dim()) +
                         " but G has " + std::to_string(regularizer.dim()));
  ViscousFamily f;
  f.label_ = base.label() + " + sigma^2 " + regularizer.label();
  f.dim_ = base.dim();
  f.base_ = std::move(base);
  f.regularizer_ = std::move(regularizer);
  return f;
}

ViscousFamily ViscousFamily::per_sigma(std::string label, Eigen::Index dim, AtSigmaFn at,
                                       SigmaDerivativeFn d_sigma) {
  ViscousFamily f;
  f.label_ = std::move(label);
  f.dim_ = dim;
  f.base_ = at(0.0);
  if (f.base_->dim() != dim) throw DimensionError(f.label_ + ": handle dimension mismatch");
  f.at_ = std::move(at);
  f.d_sigma_ = std::move(d_sigma);
  return f;
}

double ViscousFamily::value(double sigma, const Point& x) const {
  if (!std::isfinite(sigma)) throw DomainError(label_ + ": non-finite sigma");
  if (regularizer_) {
    const double f = base_->value(x);
    if (sigma == 0.0) return f;
    return f + sigma * sigma * regularizer_->value(x);
  }
  return sigma == 0.0 ? base_->value(x) : at_(sigma).value(x);
}

Vector ViscousFamily::gradient(double sigma, const Point& x) const {
  if (regularizer_) {
    Vector g = base_->gradient(x);
    if (sigma != 0.0) g += sigma * sigma * regularizer_->gradient(x);
    return g;
  }
  return sigma == 0.0 ? base_->gradient(x) : at_(sigma).gradient(x);
}

Matrix ViscousFamily::hessian(double sigma, const Point& x) const {
  if (regularizer_) {
    Matrix h = base_->hessian(x);
    if (sigma != 0.0) h += sigma * sigma * regularizer_->hessian(x);
    return h;
  }
  return sigma == 0.0 ? base_->hessian(x) : at_(sigma).hessian(x);
}

double ViscousFamily::d_sigma(double sigma, const Point& x) const {
  if (regularizer_) return 2.0 * sigma * regularizer_->value(x);
  const double d = d_sigma_(sigma, x);
  if (!std::isfinite(d)) throw EvaluationError(label_ + ": non-finite sigma-derivative", x);
  return d;
}

double ViscousFamily::reg_term(double sigma, const Point& x) const {
  if (regularizer_) return sigma * sigma * regularizer_->value(x);
  return 0.5 * sigma * d_sigma(sigma, x);
}

double ViscousFamily::reg_value(double sigma, const Point& x) const {
  if (regularizer_) return regularizer_->value(x);
  if (sigma > 0.0) return d_sigma(sigma, x) / (2.0 * sigma);
  // Limit of d_sigma / (2 sigma) as sigma -> 0, by a one-sided difference.
  constexpr double h = 1e-6;
  return (d_sigma(h, x) - d_sigma(0.0, x)) / (2.0 * h);
}

FunctionalHandle ViscousFamily::at(double sigma) const {
  if (!regularizer_) return at_(sigma);
  if (sigma == 0.0) return *base_;
  auto self = *this;
  return {label_ + " @ sigma=" + std::to_string(sigma), dim_,
          [self, sigma](const Point& x) { return self.value(sigma, x); },
          [self, sigma](const Point& x) { return self.gradient(sigma, x); },
          [self, sigma](const Point& x) { return self.hessian(sigma, x); }};
}

double evaluate_viscous(const ViscousFamily& family, double sigma, const Point& x) {
  if (x.size() != family.dim())
    throw DimensionError("evaluate_viscous: point of dimension " + std::to_string(x.size()) +
                         ", family has " + std::to_string(family.dim()));
  if (!(sigma >= 0.0)) throw DomainError("evaluate_viscous: sigma must be finite and >= 0");
  return family.value(sigma, x);
}

double entropy_bound(double sigma, EntropyForm form) {
  if (!(sigma > 0.0 && sigma < kEntropySigmaMax)) {
    std::ostringstream os;
    os.precision(17);
    os << "entropy_bound: sigma = " << sigma
       << " outside (0, e^{-e}) = (0, " << kEntropySigmaMax << "); loglog(1/sigma) must be > 0";
    throw DomainError(os.str());
  }
  const double l = std::log(1.0 / sigma);
  const double ll = std::log(l);
  const double membership = 1.0 / (l * ll);
  return form == EntropyForm::derivative ? membership / sigma : membership;
}

double entropy_residual(double sigma, double reg_term) {
  if (sigma == 0.0) return reg_term;
  if (!(sigma > 0.0 && sigma < kEntropySigmaMax)) return std::numeric_limits<double>::infinity();
  return reg_term - entropy_bound(sigma, EntropyForm::membership);
}

double grad_check(const FunctionalHandle& handle, const Point& x, double h) {
  if (!(h > 0.0 && h <= 1e-2)) throw DomainError("grad_check: step must lie in (0, 1e-2]");
  const Vector g = handle.gradient(x);
  Point xp = x;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = handle.value(xp);
    xp[i] = x[i] - h;
    const double fm = handle.value(xp);
    xp[i] = x[i];
    worst = std::max(worst, std::abs((fp - fm) / (2.0 * h) - g[i]));
  }
  return worst;
}

double hessian_check(const FunctionalHandle& handle, const Point& x, double h) {
  if (!(h > 0.0 && h <= 1e-2)) throw DomainError("hessian_check: step must lie in (0, 1e-2]");
  const Matrix hess = handle.hessian(x);
  const Matrix fd = fd_hessian([&](const Point& p) { return handle.gradient(p); }, x, h);
  return (fd - hess).cwiseAbs().maxCoeff();
}

CriticalPointRecord make_record(const ViscousFamily& family, double sigma, const Point& x) {
  CriticalPointRecord r;
  r.point = x;
  r.sigma = sigma;
  r.value = family.value(sigma, x);
  r.base_value = family.base_value(x);
  r.reg_value = family.reg_value(sigma, x);
  r.grad_norm = family.gradient(sigma, x).norm();
  r.entropy_residual = entropy_residual(sigma, family.reg_term(sigma, x));
  return r;
}

}  // namespace vmm
