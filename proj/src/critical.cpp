#include "vmm/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vmm {

namespace {

struct Spectral {
  Vector values;
  Matrix vectors;
};

Spectral eigen(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
  if (es.info() != Eigen::Success) throw Error("eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

// Levenberg step for grad = 0: s = -sum lambda/(lambda^2 + mu) (v . g) v.
Vector levenberg_step(const Spectral& sp, const Vector& g, double mu) {
  const Vector c = sp.vectors.transpose() * g;
  Vector scaled(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double l = sp.values[i];
    scaled[i] = l / (l * l + mu) * c[i];
  }
  return -(sp.vectors * scaled);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double dist_to_frames(const Sweepout& s, const Point& x) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& f : s.frames) d = std::min(d, (f - x).norm());
  return d;
}

}  // namespace

MorseData morse_data_of(const Matrix& hessian, const ToleranceProfile& tol) {
  if (hessian.rows() != hessian.cols()) throw DimensionError("morse data: Hessian is not square");
  const Spectral sp = eigen(hessian);
  MorseData m;
  m.eigenvalues = sp.values;
  m.eigenvectors = sp.vectors;
  const double norm = sp.values.size() ? sp.values.cwiseAbs().maxCoeff() : 0.0;
  m.tol_null = tol.null_band(norm);
  m.gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
    const double l = sp.values[i];
    if (l < -m.tol_null) ++m.index;
    else if (l <= m.tol_null) ++m.nullity;
    if (std::abs(l) > m.tol_null) m.gap = std::min(m.gap, std::abs(l));
  }
  return m;
}

MorseData morse_data(const Point& x, const ViscousFamily& family, double sigma,
                     const ToleranceProfile& tol) {
  return morse_data_of(family.hessian(sigma, x), tol);
}

CriticalPointRecord refine(const Point& x0, const ViscousFamily& family, double sigma,
                           const RefineOptions& options) {
  if (!(options.tol_grad > 0.0)) throw PreconditionError("refine: tol_grad must be positive");
  Point x = x0;
  Vector g = family.gradient(sigma, x);
  double merit = 0.5 * g.squaredNorm();
  std::vector<double> trace{g.norm()};
  Point best = x;
  double mu = -1.0;
  for (int it = 0; it < options.budget && g.norm() > options.tol_grad; ++it) {
    const Spectral sp = eigen(family.hessian(sigma, x));
    const double hn = std::max(1.0, sp.values.cwiseAbs().maxCoeff());
    if (mu < 0.0) mu = 1e-14 * hn * hn;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Point trial = x + levenberg_step(sp, g, mu);
      Vector gt;
      try {
        gt = family.gradient(sigma, trial);
      } catch (const EvaluationError&) {
        mu = std::max(mu * 4.0, 1e-16 * hn * hn);
        continue;
      }
      const double mt = 0.5 * gt.squaredNorm();
      if (mt < merit) {
        x = trial;
        g = gt;
        merit = mt;
        mu = std::max(mu / 3.0, 1e-16 * hn * hn);
        accepted = true;
        break;
      }
      mu = std::max(mu * 4.0, 1e-16 * hn * hn);
    }
    if (!accepted) break;
    trace.push_back(g.norm());
    best = x;
    if (x.norm() > options.norm_bound)
      throw RefineError("refine: iterate left the ball of radius " + std::to_string(options.norm_bound),
                        best, trace);
  }
  if (!(g.norm() <= options.tol_grad))
    throw RefineError("refine: gradient norm " + std::to_string(g.norm()) + " above tolerance after " +
                          std::to_string(trace.size() - 1) + " iterations",
                      best, trace);
  CriticalPointRecord r = make_record(family, sigma, x);
  r.morse = morse_data(x, family, sigma, options.tol);
  return r;
}

double near_critical_radius(double beta_prime, double sigma, double sigma_k) {
  if (!(sigma_k > sigma)) throw DomainError("near-critical radius: need sigma_k > sigma");
  if (!(beta_prime + 2.0 >= 0.0)) throw DomainError("near-critical radius: beta' + 2 must be >= 0");
  return std::sqrt(2.0 * (beta_prime + 2.0) * (sigma_k - sigma));
}

NearCriticalCertificate locate_near_critical(const Sweepout& sweepout, const ViscousFamily& family,
                                             double sigma, double sigma_k, const WidthCurve& curve,
                                             const LocateOptions& options) {
  if (!(sigma_k > sigma && sigma >= 0.0)) throw PreconditionError("locate: need 0 <= sigma < sigma_k");
  const double gap = sigma_k - sigma;
  const double b = curve.beta_at(sigma), bk = curve.beta_at(sigma_k);
  const double beta0 = curve.betas.front();

  NearCriticalCertificate base;
  base.sigma = sigma;
  base.sigma_k = sigma_k;
  base.beta_prime = options.beta_prime ? *options.beta_prime : (bk - b) / gap;
  base.delta_k = near_critical_radius(base.beta_prime, sigma, sigma_k);
  base.value_bracket = {b - gap, bk + gap};
  base.sigma_small_ok = beta0 > 0.0 && sigma <= std::exp(-4.0 / beta0);

  const auto vals_k = frame_values(sweepout, family, sigma_k);
  const double sup_k = *std::max_element(vals_k.begin(), vals_k.end());
  if (sup_k > bk + gap + 1e-12)
    throw PreconditionError("locate: sweepout is not near-optimal at sigma_k (sup " + std::to_string(sup_k) +
                            " > beta(sigma_k) + (sigma_k - sigma) = " + std::to_string(bk + gap) + ")");

  const auto vals = frame_values(sweepout, family, sigma);
  std::vector<std::size_t> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return vals[a] > vals[c]; });
  const std::size_t seeds =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(options.seed_fraction * vals.size())));

  auto fill = [&](const Point& x, std::size_t frame) {
    NearCriticalCertificate c = base;
    c.point = x;
    c.value = family.value(sigma, x);
    c.base_value = family.base_value(x);
    c.grad_norm = family.gradient(sigma, x).norm();
    c.dist_to_sweepout = dist_to_frames(sweepout, x);
    c.base_floor_ok = c.base_value >= 0.75 * beta0;
    c.seed_frame = static_cast<int>(frame);
    return c;
  };

  std::optional<NearCriticalCertificate> best;
  auto consider = [&](const NearCriticalCertificate& c) {
    if (!best || c.grad_norm < best->grad_norm) best = c;
  };
  for (std::size_t k = 0; k < std::min(seeds, order.size()); ++k) {
    const std::size_t f = order[k];
    const Point seed = sweepout.frames[f];
    auto c = fill(seed, f);
    if (c.holds()) return c;
    consider(c);

    Point x = seed;
    Vector g = family.gradient(sigma, x);
    double mu = -1.0;
    for (int it = 0; it < options.budget; ++it) {
      const Spectral sp = eigen(family.hessian(sigma, x));
      const double hn = std::max(1.0, sp.values.cwiseAbs().maxCoeff());
      if (mu < 0.0) mu = 1e-10 * hn * hn;
      bool moved = false;
      for (int tries = 0; tries < 40 && !moved; ++tries) {
        Point trial = x + levenberg_step(sp, g, mu);
        const Vector off = trial - seed;
        if (off.norm() > base.delta_k) trial = seed + off * (base.delta_k / off.norm());
        Vector gt;
        try {
          gt = family.gradient(sigma, trial);
        } catch (const EvaluationError&) {
          mu *= 4.0;
          continue;
        }
        if (gt.squaredNorm() < g.squaredNorm()) {
          x = trial;
          g = gt;
          mu /= 3.0;
          moved = true;
        } else {
          mu *= 4.0;
        }
      }
      if (!moved) break;
      c = fill(x, f);
      if (c.holds()) return c;
      consider(c);
    }
  }
  throw LocateError("locate: no point within delta_k = " + std::to_string(base.delta_k) +
                        " satisfies the certificate; the sweepout is probably not near-optimal",
                    *best);
}

bool index_semicontinuity_check(const std::vector<CriticalPointRecord>& tail,
                                const CriticalPointRecord& limit) {
  if (!limit.morse) throw PreconditionError("semicontinuity: limit record has no Morse data");
  if (tail.empty()) return true;
  int min_ind = std::numeric_limits<int>::max(), max_sum = 0;
  for (const auto& r : tail) {
    if (!r.morse) throw PreconditionError("semicontinuity: record has no Morse data");
    min_ind = std::min(min_ind, r.morse->index);
    max_sum = std::max(max_sum, r.morse->index + r.morse->nullity);
  }
  return limit.morse->index <= min_ind && limit.morse->index + limit.morse->nullity >= max_sum;
}

void to_json(nlohmann::json& j, const MorseData& m) {
  const Eigen::Index n = m.eigenvectors.rows();
  std::vector<double> vecs(m.eigenvectors.data(), m.eigenvectors.data() + m.eigenvectors.size());
  j = {{"eigenvalues", to_std(m.eigenvalues)}, {"index", m.index}, {"nullity", m.nullity},
       {"tol_null", m.tol_null}, {"eigenvectors", vecs}, {"dim", n}};
  if (std::isfinite(m.gap)) j["gap"] = m.gap;
  else j["gap"] = nullptr;
}

void from_json(const nlohmann::json& j, MorseData& m) {
  m.eigenvalues = to_eigen(j.at("eigenvalues").get<std::vector<double>>());
  m.index = j.at("index").get<int>();
  m.nullity = j.at("nullity").get<int>();
  m.tol_null = j.at("tol_null").get<double>();
  m.gap = j.at("gap").is_null() ? std::numeric_limits<double>::infinity() : j.at("gap").get<double>();
  const auto n = j.at("dim").get<Eigen::Index>();
  const auto vecs = j.at("eigenvectors").get<std::vector<double>>();
  m.eigenvectors = n > 0 ? Matrix(Eigen::Map<const Matrix>(vecs.data(), n, static_cast<Eigen::Index>(vecs.size()) / n))
                         : Matrix();
}

void to_json(nlohmann::json& j, const CriticalPointRecord& r) {
  j = {{"point", to_std(r.point)}, {"sigma", r.sigma}, {"value", r.value}, {"base_value", r.base_value},
       {"reg_value", r.reg_value}, {"grad_norm", r.grad_norm}, {"entropy_residual", nullptr}};
  if (std::isfinite(r.entropy_residual)) j["entropy_residual"] = r.entropy_residual;
  if (r.morse) j["morse"] = *r.morse;
  else j["morse"] = nullptr;
}

void from_json(const nlohmann::json& j, CriticalPointRecord& r) {
  r.point = to_eigen(j.at("point").get<std::vector<double>>());
  r.sigma = j.at("sigma").get<double>();
  r.value = j.at("value").get<double>();
  r.base_value = j.at("base_value").get<double>();
  r.reg_value = j.at("reg_value").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.entropy_residual = j.at("entropy_residual").is_null() ? std::numeric_limits<double>::infinity()
                                                          : j.at("entropy_residual").get<double>();
  if (j.at("morse").is_null()) r.morse.reset();
  else r.morse = j.at("morse").get<MorseData>();
}

void to_json(nlohmann::json& j, const NearCriticalCertificate& c) {
  j = {{"point", to_std(c.point)},
       {"sigma", c.sigma},
       {"sigma_k", c.sigma_k},
       {"beta_prime", c.beta_prime},
       {"delta_k", c.delta_k},
       {"dist_to_sweepout", c.dist_to_sweepout},
       {"value", c.value},
       {"value_bracket", {c.value_bracket.first, c.value_bracket.second}},
       {"grad_norm", c.grad_norm},
       {"base_value", c.base_value},
       {"base_floor_ok", c.base_floor_ok},
       {"sigma_small_ok", c.sigma_small_ok},
       {"seed_frame", c.seed_frame}};
}

void from_json(const nlohmann::json& j, NearCriticalCertificate& c) {
  c.point = to_eigen(j.at("point").get<std::vector<double>>());
  c.sigma = j.at("sigma").get<double>();
  c.sigma_k = j.at("sigma_k").get<double>();
  c.beta_prime = j.at("beta_prime").get<double>();
  c.delta_k = j.at("delta_k").get<double>();
  c.dist_to_sweepout = j.at("dist_to_sweepout").get<double>();
  c.value = j.at("value").get<double>();
  c.value_bracket = {j.at("value_bracket").at(0).get<double>(), j.at("value_bracket").at(1).get<double>()};
  c.grad_norm = j.at("grad_norm").get<double>();
  c.base_value = j.at("base_value").get<double>();
  c.base_floor_ok = j.at("base_floor_ok").get<bool>();
  c.sigma_small_ok = j.at("sigma_small_ok").get<bool>();
  c.seed_frame = j.at("seed_frame").get<int>();
}

}  // namespace vmm
