#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <iostream>
#include <random>

#include "vmm/critical.hpp"
#include "vmm/functionals.hpp"
#include "vmm/perturb.hpp"

using namespace vmm;

namespace {

ViscousFamily with_quartic(const FunctionalHandle& f) { return ViscousFamily::additive(f, make_quartic(f.dim())); }

Point near(std::mt19937_64& rng, const std::vector<Point>& K, double radius) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Point& k = K[std::uniform_int_distribution<std::size_t>(0, K.size() - 1)(rng)];
  Vector v(k.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return k + v * (radius * u(rng) / v.norm());
}

double dist(const std::vector<Point>& K, const Point& x) {
  double d = 1e300;
  for (const auto& k : K) d = std::min(d, (x - k).norm());
  return d;
}

PerturbationSpec monkey_spec(double c) {
  PerturbationSpec s;
  s.K = {Vector::Zero(2)};
  s.bump = build_bump(s.K, 0.2);
  s.c0 = neighbourhood_c0(s.K, 0.2);
  s.c1 = s.bump.c1();
  s.y = Eigen::Vector2d(c, 0.0);
  s.x0 = Vector::Zero(2);
  // Smallest admissible budget for this tilt, with a factor 2 of room.
  s.epsilon = 2.0 * std::abs(c) * s.c0 * s.c1 / (0.2 * 0.2);
  return s;
}

}  // namespace

TEST_CASE("bump examples") {
  const auto b = build_bump({Vector::Zero(2)}, 0.1);
  CHECK(b.value(Vector::Zero(2)) == 1.0);
  CHECK(b.value(Eigen::Vector2d(0.25, 0)) == 0.0);
  CHECK(b.value(Eigen::Vector2d(0.14, 0)) == 1.0);
  CHECK(b.value(Eigen::Vector2d(0.21, 0)) == 0.0);
  const double mid = b.value(Eigen::Vector2d(0.18, 0));
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
}

TEST_CASE("bump plateau, support and derivative bounds") {
  std::mt19937_64 rng(9);
  std::vector<Point> K{Eigen::Vector2d(0, 0), Eigen::Vector2d(0.03, 0.01), Eigen::Vector2d(0.5, -0.2),
                       Eigen::Vector2d(0.52, -0.21)};
  const double delta = 0.1;
  const auto b = build_bump(K, delta);
  CHECK(b.centers().size() == 2);
  const double c1 = b.c1();
  double worst = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const Point x = near(rng, K, 3.0 * delta);
    const double d = dist(K, x);
    const double v = b.value(x);
    if (d <= delta) CHECK(v == 1.0);
    if (d >= 2.0 * delta) CHECK(v == 0.0);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    const double h = Eigen::SelfAdjointEigenSolver<Matrix>(b.hessian(x)).eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max({worst, v, b.gradient(x).norm(), h});
  }
  CHECK(worst <= c1 / (delta * delta));

  // Derivatives against central differences in the transition shell.
  const Point x = Eigen::Vector2d(0.17, 0.03);
  const double hstep = 1e-6;
  for (int i = 0; i < 2; ++i) {
    const Vector e = Vector::Unit(2, i) * hstep;
    CHECK(b.gradient(x)[i] == doctest::Approx((b.value(x + e) - b.value(x - e)) / (2 * hstep)).epsilon(1e-6));
    const Vector col = (b.gradient(x + e) - b.gradient(x - e)) / (2 * hstep);
    CHECK((b.hessian(x).col(i) - col).norm() <= 1e-5 * (1 + col.norm()));
  }
}

TEST_CASE("perturbed functional on the plateau and outside the support") {
  const auto mk = make_monkey_saddle(0.0);
  const auto spec = monkey_spec(-0.03);
  const auto ft = perturb_functional(mk, spec);
  const Point in = Eigen::Vector2d(0.05, -0.1);
  CHECK(ft.gradient(in) == Vector(mk.gradient(in) + spec.y));
  CHECK(ft.hessian(in) == mk.hessian(in));
  const Point out = Eigen::Vector2d(0.5, 0.1);
  CHECK(ft.value(out) == mk.value(out));
  CHECK(ft.gradient(out) == mk.gradient(out));

  auto bad = spec;
  bad.y *= 10.0;
  CHECK_THROWS_AS(perturb_functional(mk, bad), PreconditionError);
}

TEST_CASE("monkey saddle splits into two non-degenerate saddles") {
  const auto mk = with_quartic(make_monkey_saddle(0.0));
  const auto fam = perturb_family(mk, monkey_spec(-0.03));
  for (double s : {1.0, -1.0}) {
    const auto r = refine(Eigen::Vector2d(0.09 * s, 0.01), fam, 0.0);
    CHECK(r.point[0] == doctest::Approx(0.1 * s).epsilon(1e-9));
    CHECK(std::abs(r.point[1]) < 1e-10);
    CHECK(r.morse->index == 1);
    CHECK(r.morse->eigenvalues[0] == doctest::Approx(-0.6).epsilon(1e-8));
    CHECK(r.morse->eigenvalues[1] == doctest::Approx(0.6).epsilon(1e-8));
  }

  const auto cert = certify_nondegenerate(fam, 0.0, {Vector::Zero(2)}, 0.2);
  CHECK(cert.certified());
  int plateau = 0;
  for (const auto& r : cert.records)
    if (r.point.norm() < 0.2) {
      ++plateau;
      CHECK(r.morse->gap == doctest::Approx(0.6).epsilon(1e-8));
    }
  CHECK(plateau == 2);

  CHECK(certify_nondegenerate(mk, 0.0, {Vector::Zero(2)}, 0.2).status == CertifyStatus::failed);
  const auto q = with_quartic(make_quadratic_saddle(1, 1));
  const auto qc = certify_nondegenerate(q, 0.0, {Vector::Zero(2)}, 0.2);
  CHECK(qc.certified());
  CHECK(qc.records.size() == 1);
}

TEST_CASE("sampled tilts") {
  const std::vector<Point> K{Vector::Zero(2)};
  const double delta = 0.2, eps = 0.5;
  const auto s = sample_tilt(K, delta, eps, 42);
  CHECK(s.y.norm() < s.norm_bound());
  CHECK(s.y.norm() > 0.0);
  CHECK(nlohmann::json(sample_tilt(K, delta, eps, 42)) == nlohmann::json(s));
  CHECK(nlohmann::json(sample_tilt(K, delta, eps, 43)) != nlohmann::json(s));

  const auto mk = make_monkey_saddle(0.0);
  const auto ft = perturb_functional(mk, s);
  std::mt19937_64 rng(1);
  double c0_err = 0.0, c1_err = 0.0, worst_sign = -1e300;
  for (int i = 0; i < 10000; ++i) {
    const Point x = near(rng, K, 2.0 * delta);
    const double d = ft.value(x) - mk.value(x);
    worst_sign = std::max(worst_sign, d);
    c0_err = std::max(c0_err, std::abs(d));
    c1_err = std::max(c1_err, (ft.gradient(x) - mk.gradient(x)).norm());
  }
  CHECK(worst_sign <= 1e-12);
  CHECK(c0_err <= eps);
  CHECK(c1_err <= eps);

  const auto zero = sample_tilt(K, delta, 0.0, 42);
  CHECK(zero.y == Vector::Zero(2));
  const auto fz = perturb_functional(mk, zero);
  for (int i = 0; i < 100; ++i) {
    const Point x = near(rng, K, 2.0 * delta);
    CHECK(fz.value(x) == mk.value(x));
  }

  const auto back = nlohmann::json(s).get<PerturbationSpec>();
  CHECK(back.y == s.y);
  CHECK(back.x0 == s.x0);
  CHECK(nlohmann::json(back) == nlohmann::json(s));
}

TEST_CASE("resampling loop and index semicontinuity as the tilt shrinks") {
  const auto mk = with_quartic(make_monkey_saddle(0.0));
  const std::vector<Point> K{Vector::Zero(2)};
  std::vector<CriticalPointRecord> tail;
  for (double eps : {400.0, 200.0, 100.0}) {
    int tries = 0;
    NondegeneracyCertificate cert;
    for (unsigned long long seed = 1; seed <= 10; ++seed) {
      ++tries;
      const auto spec = sample_tilt(K, 0.2, eps, seed);
      cert = certify_nondegenerate(perturb_family(mk, spec), 0.0, K, 0.2);
      if (cert.certified()) break;
    }
    if (!cert.certified()) std::cerr << "monkey suite: no certified tilt after " << tries << " draws\n";
    CriticalPointRecord closest;
    double best = 1e300;
    for (const auto& r : cert.records)
      if (r.point.norm() < best) {
        best = r.point.norm();
        closest = r;
      }
    if (best < 1e300) tail.push_back(closest);
  }
  REQUIRE(!tail.empty());
  const auto limit = refine(Vector::Zero(2), mk, 0.0);
  CHECK(index_semicontinuity_check(tail, limit));
}

TEST_CASE("sigma stability radius") {
  CHECK(sigma_stability_radius(0.6, 3.0) == doctest::Approx(0.1));
  CHECK(std::isinf(sigma_stability_radius(0.6, 0.0)));
}
