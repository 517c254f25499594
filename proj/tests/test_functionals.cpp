#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "vmm/functionals.hpp"

using namespace vmm;
using std::numbers::pi;

namespace {

Point circle_loop(int n, double r) {
  return sample_loop(n, [r](double t) { return std::array<double, 2>{r * std::cos(t), r * std::sin(t)}; });
}

Point jitter(Point x, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-amp, amp);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += u(rng);
  return x;
}

// Adaptive Simpson, used as an independent quadrature oracle.
double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 30) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  const double l = (m - a) / 6.0 * (fa + 4 * f(0.5 * (a + m)) + fm);
  const double r = (b - m) / 6.0 * (fm + 4 * f(0.5 * (m + b)) + fb);
  if (depth <= 0 || std::abs(l + r - whole) < 15 * tol) return l + r + (l + r - whole) / 15;
  return simpson(f, a, m, tol / 2, depth - 1) + simpson(f, m, b, tol / 2, depth - 1);
}

}  // namespace

TEST_CASE("quadratic saddle") {
  auto f = make_quadratic_saddle(1, 1, Eigen::Vector2d(1, 1));
  CHECK(f.value(Eigen::Vector2d(1, 1)) == 0.0);
  const Matrix h = f.hessian(Eigen::Vector2d(0, 0));
  CHECK(h(0, 0) == -2.0);
  CHECK(h(1, 1) == 2.0);
  CHECK(h(0, 1) == 0.0);
  CHECK(make_quadratic_saddle(0, 2).hessian(Vector::Zero(2)).diagonal().minCoeff() > 0);
  CHECK((make_quadratic_saddle(2, 1).hessian(Vector::Zero(3)).diagonal().array() < 0).count() == 2);
  CHECK_THROWS_AS(make_quadratic_saddle(0, 0), DomainError);
  CHECK_THROWS_AS(make_quadratic_saddle(1, 1, Eigen::Vector2d(1, -1)), DomainError);
}

TEST_CASE("double well") {
  auto f = make_double_well();
  CHECK(f.value(Eigen::Vector2d(1, 0)) == 0.0);
  CHECK(f.value(Eigen::Vector2d(-1, 0)) == 0.0);
  CHECK(f.value(Eigen::Vector2d(0, 0)) == 1.0);
  const Matrix h = f.hessian(Eigen::Vector2d(0, 0));
  CHECK(h(0, 0) == -4.0);
  CHECK(h(1, 1) == 10.0);
}

TEST_CASE("monkey saddle and its tilts") {
  auto f = make_monkey_saddle(0.0);
  CHECK(f.gradient(Vector::Zero(2)).norm() == 0.0);
  CHECK(f.hessian(Vector::Zero(2)).norm() == 0.0);

  // 3x^2 - 3y^2 + c = 0, -6xy = 0 with c = -0.03 gives (+-0.1, 0).
  auto tilted = make_linear_tilt(f, Eigen::Vector2d(-0.03, 0));
  for (double x : {0.1, -0.1}) {
    CHECK(tilted.gradient(Eigen::Vector2d(x, 0)).norm() < 1e-15);
    const Matrix h = tilted.hessian(Eigen::Vector2d(x, 0));
    CHECK(h(0, 0) == doctest::Approx(6 * x));
    CHECK(h(1, 1) == doctest::Approx(-6 * x));
  }
  auto up = make_linear_tilt(f, Eigen::Vector2d(0.03, 0));
  for (double y : {0.1, -0.1}) CHECK(up.gradient(Eigen::Vector2d(0, y)).norm() < 1e-15);

  // Grid search confirms there are no other critical points nearby.
  int near_zero = 0;
  for (int i = -100; i <= 100; ++i)
    for (int j = -100; j <= 100; ++j) {
      const Eigen::Vector2d p(i * 2e-3, j * 2e-3);
      if (tilted.gradient(p).norm() < 2e-3) {
        ++near_zero;
        CHECK(std::min((p - Eigen::Vector2d(0.1, 0)).norm(), (p + Eigen::Vector2d(0.1, 0)).norm()) < 0.02);
      }
    }
  CHECK(near_zero > 0);
}

TEST_CASE("planted saddle structure") {
  auto f = make_planted_saddle(1.0);
  CHECK(f.value(Vector::Zero(2)) == 1.0);
  CHECK(f.gradient(Eigen::Vector2d(0, std::sqrt(0.5))).norm() < 1e-14);
  CHECK(f.value(Eigen::Vector2d(0, std::sqrt(0.5))) == doctest::Approx(0.75));
  CHECK(f.value(Eigen::Vector2d(1, 0)) == 0.0);
  const Matrix h = f.hessian(Vector::Zero(2));
  CHECK(h(0, 0) == -4.0);
  CHECK(h(1, 1) == -2.0);
}

TEST_CASE("loop length oracles") {
  // Unit square traced with corners and midpoints.
  Point sq(16);
  sq << 0, 0, 0.5, 0, 1, 0, 1, 0.5, 1, 1, 0.5, 1, 0, 1, 0, 0.5;
  CHECK(make_loop_length(flat_chart(), {8, true}).value(sq) == doctest::Approx(4.0).epsilon(1e-15));

  const double R = 2, r = 0.5;
  const Point inner = sample_loop(64, [](double t) { return std::array<double, 2>{t, pi}; });
  const double len = make_loop_length(torus_chart(R, r), {64, true}).value(inner);
  CHECK(std::abs(len / (2 * pi * (R - r)) - 1) < 5e-3);

  const Point eq = sample_loop(64, [](double t) { return std::array<double, 2>{t, 0.0}; });
  const double le = make_loop_length(ellipsoid_chart(1.0, 0.5), {64, true}).value(eq);
  CHECK(std::abs(le / (2 * pi) - 1) < 5e-3);

  CHECK_THROWS_AS(make_loop_length(flat_chart(), {4, true}), DomainError);
}

TEST_CASE("degenerate segment is reported with its index") {
  auto f = make_loop_length(flat_chart(), {8, true});
  Point x = circle_loop(8, 1.0);
  x.segment<2>(6) = x.segment<2>(4);
  try {
    f.gradient(x);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    CHECK(e.segment() == 2);
  }
  CHECK_THROWS_AS(make_loop_bending(flat_chart(), {8, true}).value(x), SingularityError);
}

TEST_CASE("bending oracles") {
  Point arc(2 * 12);
  for (int i = 0; i < 12; ++i) arc.segment<2>(2 * i) = Eigen::Vector2d(0.3 * i, 0.1 * i);
  const double len = 11 * std::hypot(0.3, 0.1);
  CHECK(make_loop_bending(flat_chart(), {12, false}).value(arc) == doctest::Approx(len).epsilon(1e-13));

  auto g = make_loop_bending(flat_chart(), {256, true});
  for (double rad : {0.5, 1.0, 2.0}) {
    const double expect = 2 * pi * rad * std::pow(1 + 1 / (rad * rad), 2);
    CHECK(std::abs(g.value(circle_loop(256, rad)) / expect - 1) < 0.02);
  }
  CHECK(std::abs(g.value(circle_loop(256, 1.0)) / (8 * pi) - 1) < 0.02);

  // G dominates length.
  std::mt19937_64 rng(3);
  auto l = make_loop_length(flat_chart(), {32, true});
  auto g32 = make_loop_bending(flat_chart(), {32, true});
  for (int t = 0; t < 20; ++t) {
    const Point x = jitter(circle_loop(32, 1.0), 0.05, rng);
    CHECK(g32.value(x) >= l.value(x));
  }
}

TEST_CASE("alpha energy") {
  const int n = 64;
  const Point constant = sample_loop(n, [](double) { return std::array<double, 2>{0.3, -0.2}; });
  CHECK(make_alpha_energy(n, 0.4, flat_chart()).value(constant) == 0.0);

  // sigma = 0 on the flat target is the discrete Dirichlet energy.
  std::mt19937_64 rng(11);
  const Point x = jitter(circle_loop(n, 1.0), 0.05, rng);
  const double h = 2 * pi / n;
  double dirichlet = 0;
  for (int i = 0; i < n; ++i) dirichlet += 0.5 * (x.segment<2>(2 * ((i + 1) % n)) - x.segment<2>(2 * i)).squaredNorm() / h;
  CHECK(make_alpha_energy(n, 0.0, flat_chart()).value(x) == doctest::Approx(dirichlet).epsilon(1e-13));

  // Unit circle at sigma = 0.1 against quadrature of the continuum integrand.
  const double quad = simpson(
      [](double t) {
        const double du2 = std::pow(-std::sin(t), 2) + std::pow(std::cos(t), 2);
        return 0.5 * (std::pow(1 + du2, 1.1) - 1);
      },
      0, 2 * pi, 1e-13);
  const double e = make_alpha_energy(n, 0.1, flat_chart()).value(circle_loop(n, 1.0));
  // Chord/arc discretization error is O((pi/N)^2).
  CHECK(std::abs(e / quad - 1) < 2 * std::pow(pi / n, 2));

  // Per-sigma family: reg term is (sigma/2) dF/dsigma; check d_sigma by differences.
  auto fam = make_alpha_family(n, flat_chart());
  const double s = 0.05, ds = 1e-6;
  const double fd = (fam.value(s + ds, x) - fam.value(s - ds, x)) / (2 * ds);
  CHECK(fam.d_sigma(s, x) == doctest::Approx(fd).epsilon(1e-7));
  CHECK(fam.reg_term(s, x) == doctest::Approx(0.5 * s * fd).epsilon(1e-7));
}

TEST_CASE("every registered functional passes derivative checks at random points") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<FunctionalHandle> planar = {make_quadratic_saddle(1, 1), make_quadratic_saddle(2, 1),
                                          make_double_well(), make_monkey_saddle(0.0),
                                          make_monkey_saddle(0.5), make_planted_saddle(1.0),
                                          make_quartic(2)};
  for (const auto& f : planar)
    for (int t = 0; t < 100; ++t) {
      Point x(f.dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
      CHECK(grad_check(f, x, 1e-5) < 1e-5);
      CHECK(hessian_check(f, x, 1e-5) < 1e-4);
    }

  const int n = 16;
  std::vector<std::pair<FunctionalHandle, Point>> loops;
  loops.emplace_back(make_loop_length(torus_chart(2, 0.5), {n, true}),
                     sample_loop(n, [](double t) { return std::array<double, 2>{t, 0.3}; }));
  loops.emplace_back(make_loop_bending(ellipsoid_chart(1, 0.5), {n, true}),
                     sample_loop(n, [](double t) { return std::array<double, 2>{t, 0.2}; }));
  loops.emplace_back(make_alpha_energy(n, 0.1, ellipsoid_chart(1, 0.5)),
                     sample_loop(n, [](double t) { return std::array<double, 2>{t, 0.1}; }));
  loops.emplace_back(make_loop_bending(flat_chart(), {n, true}), circle_loop(n, 1.0));
  for (auto& [f, base] : loops)
    for (int t = 0; t < 10; ++t) {
      const Point x = jitter(base, 0.02, rng);
      CHECK(grad_check(f, x, 1e-5) < 1e-5);
      CHECK(hessian_check(f, x, 1e-5) < 1e-4);
    }
}

TEST_CASE("chart derivatives match finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (const auto& c : {flat_chart(), torus_chart(2, 0.5), ellipsoid_chart(1, 0.5)})
    for (int t = 0; t < 100; ++t) {
      const double a = u(rng), b = u(rng), h = 1e-5;
      const Jac32 j = c.jacobian(a, b);
      CHECK((((c.embed(a + h, b) - c.embed(a - h, b)) / (2 * h)) - j.col(0)).norm() < 1e-5);
      CHECK((((c.embed(a, b + h) - c.embed(a, b - h)) / (2 * h)) - j.col(1)).norm() < 1e-5);
      const auto s = c.second(a, b);
      CHECK((((c.jacobian(a + h, b) - c.jacobian(a - h, b)) / (2 * h)).col(0) - s[0]).norm() < 1e-5);
      CHECK((((c.jacobian(a + h, b) - c.jacobian(a - h, b)) / (2 * h)).col(1) - s[1]).norm() < 1e-5);
      CHECK((((c.jacobian(a, b + h) - c.jacobian(a, b - h)) / (2 * h)).col(1) - s[2]).norm() < 1e-5);
    }
}

TEST_CASE("loop energies are invariant under cyclic relabelling") {
  std::mt19937_64 rng(9);
  const int n = 24;
  const Point x = jitter(sample_loop(n, [](double t) { return std::array<double, 2>{t, 0.4}; }), 0.05, rng);
  auto chart = torus_chart(2, 0.5);
  auto l = make_loop_length(chart, {n, true});
  auto g = make_loop_bending(chart, {n, true});
  auto a = make_alpha_energy(n, 0.2, chart);
  for (int s : {1, 5, 23}) {
    const Point y = relabel_loop(x, s);
    CHECK(l.value(y) == l.value(x));
    CHECK(g.value(y) == g.value(x));
    CHECK(a.value(y) == a.value(x));
  }
}

TEST_CASE("loop length is invariant under rigid motions") {
  std::mt19937_64 rng(13);
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto chart = ellipsoid_chart(1, 0.5);
  const auto moved = chart.transformed(rot, Vec3(3, -1, 2));
  const Point x = jitter(sample_loop(32, [](double t) { return std::array<double, 2>{t, 0.2}; }), 0.05, rng);
  CHECK(std::abs(make_loop_length(chart, {32, true}).value(x) -
                 make_loop_length(moved, {32, true}).value(x)) < 1e-10);
}
