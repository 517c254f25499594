#include "vmm/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vmm {

double EntropySchedule::a(int j) const {
  if (j < 1) throw DomainError("schedule: j must be >= 1");
  return 1.0 / j;
}

double EntropySchedule::b(int j) const {
  if (j < 2) throw DomainError("schedule: b_j needs j >= 2");
  const double l1 = std::max(std::log(static_cast<double>(j)), log_floor);
  const double l2 = std::max(std::log(l1), log_floor);
  const double l3 = std::max(std::log(l2), log_floor);
  return 1.0 / ((j + 1.0) * l1 * l2 * l3);
}

double EntropySchedule::delta(int j) const {
  if (j < 2) throw DomainError("schedule: delta_j needs j >= 2");
  const double l1 = std::max(std::log(static_cast<double>(j)), log_floor);
  const double l2 = std::max(std::log(l1), log_floor);
  const double l3 = std::max(std::log(l2), log_floor);
  return 1.0 / l3;
}

std::vector<double> EntropySchedule::b_prefix(int count) const {
  std::vector<double> out(std::max(count, 0));
  for (int k = 0; k < count; ++k) out[k] = b(J_start + k);
  return out;
}

double beta_prime_estimate(const WidthCurve& curve, double sigma, double window) {
  const auto& s = curve.sigmas;
  if (s.size() < 3) throw PreconditionError("beta_prime_estimate: fewer than 3 samples");
  if (!(window > 0.0)) throw DomainError("beta_prime_estimate: window must be positive");
  if (sigma < s.front() || sigma + window > s.back() * (1 + 1e-12))
    throw PreconditionError("beta_prime_estimate: window leaves the sampled grid");
  const auto first = std::lower_bound(s.begin(), s.end(), sigma * (1 - 1e-12));
  const auto last = std::upper_bound(s.begin(), s.end(), (sigma + window) * (1 + 1e-12));
  if (last - first < 3)
    throw PreconditionError("beta_prime_estimate: window spans fewer than 3 samples");
  const double hi = std::min(sigma + window, s.back());
  return (curve.beta_at(hi) - curve.beta_at(sigma)) / window;
}

std::vector<EntropyCertificate> entropy_certificates(const WidthCurve& curve, int window_steps) {
  if (window_steps < 2) throw PreconditionError("entropy certificates: window_steps must be >= 2");
  std::vector<EntropyCertificate> out;
  const auto& s = curve.sigmas;
  for (std::size_t i = 0; i + window_steps < s.size(); ++i) {
    if (!(s[i] > 0.0 && s[i] < kEntropySigmaMax)) continue;
    EntropyCertificate c;
    c.sigma = s[i];
    const double w = s[i + window_steps] - s[i];
    c.beta_prime_est = (curve.betas[i + window_steps] - curve.betas[i]) / w;
    c.bound = entropy_bound(s[i], EntropyForm::derivative);
    c.slack = c.bound - c.beta_prime_est;
    c.stencil.assign(s.begin() + i, s.begin() + i + window_steps + 1);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<EntropyCertificate> select_entropy_sigmas(const WidthCurve& curve, int window_steps) {
  auto all = entropy_certificates(curve, window_steps);
  std::vector<EntropyCertificate> out;
  for (auto& c : all)
    if (c.accepted()) out.push_back(std::move(c));
  return out;
}

double good_interval_fraction(const WidthCurve& curve, const EntropySchedule& schedule, int j) {
  const auto [lo, hi] = schedule.interval(j);
  const auto& s = curve.sigmas;
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s[k] >= lo * (1 - 1e-12) && s[k] <= hi * (1 + 1e-12)) idx.push_back(k);
  if (idx.size() < 16)
    throw PreconditionError("good_interval_fraction: grid has " + std::to_string(idx.size()) +
                            " samples in I_j, need 16 (coverage)");
  const double aj = schedule.a(j);
  const double bound = entropy_bound(aj, EntropyForm::derivative);
  double good = 0.0, total = 0.0;
  for (std::size_t m = 0; m + 1 < idx.size(); ++m) {
    const std::size_t k = idx[m], k1 = idx[m + 1];
    const double len = s[k1] - s[k];
    total += len;
    if ((curve.betas[k1] - curve.betas[k]) / len <= bound) good += len;
  }
  return total > 0.0 ? good / total : 1.0;
}

double liminf_ratio_check(const std::vector<double>& increments, const std::vector<double>& b,
                          int prefix) {
  const std::size_t n = std::min({increments.size(), b.size(), static_cast<std::size_t>(std::max(prefix, 0))});
  if (n == 0) throw PreconditionError("liminf_ratio_check: empty prefix");
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(b[k] > 0.0)) throw DomainError("liminf_ratio_check: b must be positive");
    m = std::min(m, increments[k] / b[k]);
  }
  return m;
}

std::vector<int> accepted_indices(const std::vector<double>& increments, const std::vector<double>& b,
                                  int prefix) {
  const std::size_t n = std::min({increments.size(), b.size(), static_cast<std::size_t>(std::max(prefix, 0))});
  std::vector<int> out;
  for (std::size_t k = 0; k < n; ++k)
    if (increments[k] <= b[k]) out.push_back(static_cast<int>(k));
  return out;
}

void to_json(nlohmann::json& j, const EntropyCertificate& c) {
  j = {{"sigma", c.sigma}, {"beta_prime_est", c.beta_prime_est}, {"bound", c.bound},
       {"slack", c.slack}, {"stencil", c.stencil}};
}

void from_json(const nlohmann::json& j, EntropyCertificate& c) {
  c.sigma = j.at("sigma").get<double>();
  c.beta_prime_est = j.at("beta_prime_est").get<double>();
  c.bound = j.at("bound").get<double>();
  c.slack = j.at("slack").get<double>();
  c.stencil = j.at("stencil").get<std::vector<double>>();
}

}  // namespace vmm
