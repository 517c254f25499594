#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "vmm/functionals.hpp"
#include "vmm/sweepout.hpp"

using namespace vmm;

namespace {

ViscousFamily dw_family() { return ViscousFamily::additive(make_double_well(), make_quartic(2)); }

FunctionalHandle zero_g(Eigen::Index n) {
  return {"zero", n, [](const Point&) { return 0.0; }, [n](const Point&) -> Vector { return Vector::Zero(n); },
          [n](const Point&) -> Matrix { return Matrix::Zero(n, n); }};
}

bool same_boundary(const Sweepout& a, const Sweepout& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.boundary[i] && (a.frames[i].array() != b.frames[i].array()).any()) return false;
  return true;
}

}  // namespace

TEST_CASE("sweepout construction and validation") {
  auto s = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);
  CHECK(s.size() == 33);
  CHECK(s.boundary.front());
  CHECK(s.boundary.back());
  CHECK(std::count(s.boundary.begin(), s.boundary.end(), true) == 2);
  CHECK(s.frames[16].norm() == 0.0);
  CHECK_THROWS_AS(Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 8), PreconditionError);

  std::vector<Point> g;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) g.push_back(Eigen::Vector2d(i, j));
  auto grid = Sweepout::grid(g, 5, 4);
  CHECK(std::count(grid.boundary.begin(), grid.boundary.end(), false) == 3 * 2);
}

TEST_CASE("sup_over") {
  auto fam = dw_family();
  std::vector<Point> same(20, Eigen::Vector2d(0.3, 0.2));
  const auto [v, i] = sup_over(Sweepout::path(same), fam, 0.1);
  CHECK(i == 0);
  CHECK(v == fam.value(0.1, Eigen::Vector2d(0.3, 0.2)));

  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);
  const auto [m, k] = sup_over(line, fam, 0.0);
  CHECK(m == 1.0);
  CHECK(k == 16);

  auto q = ViscousFamily::additive(make_quadratic_saddle(1, 1), make_quartic(2));
  const auto [qm, qk] = sup_over(line, q, 0.0);
  CHECK(qm == 0.0);
  CHECK(qk == 16);
}

TEST_CASE("sup_over names the failing frame") {
  FunctionalHandle bad("blowup", 2, [](const Point& x) { return x[0] > 0.5 ? std::nan("") : 0.0; },
                       [](const Point&) -> Vector { return Vector::Zero(2); },
                       [](const Point&) -> Matrix { return Matrix::Zero(2, 2); });
  auto fam = ViscousFamily::additive(bad, zero_g(2));
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 17);
  try {
    sup_over(line, fam, 0.0);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("frame 13") != std::string::npos);
  }
}

TEST_CASE("tighten keeps an optimal double-well path") {
  auto fam = dw_family();
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);
  auto r = tighten(line, fam, 0.0, 100);
  CHECK(r.sup_before - r.sup_after < 1e-10);
  CHECK(r.sup_after <= r.sup_before);
  CHECK(same_boundary(line, r.sweepout));
}

TEST_CASE("tighten reaches the saddle level of the normal form") {
  auto fam = ViscousFamily::additive(make_quadratic_saddle(1, 1), make_quartic(2));
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0.5), Eigen::Vector2d(1, 0.5), 33);
  auto r = tighten(line, fam, 0.0, 500);
  CHECK(r.sup_before == doctest::Approx(0.25));
  CHECK(std::abs(r.sup_after) < 1e-6);
  CHECK(r.iterations <= 500);
  CHECK(same_boundary(line, r.sweepout));
}

TEST_CASE("tighten never raises the sup, step by step") {
  auto fam = ViscousFamily::additive(make_planted_saddle(1.0), make_quartic(2));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 0.2);
  std::vector<Point> f;
  for (int i = 0; i < 25; ++i) {
    const double t = -1.2 + 2.4 * i / 24.0;
    f.push_back(Eigen::Vector2d(t, (i == 0 || i == 24) ? 0.0 : 0.6 + n(rng)));
  }
  Sweepout s = Sweepout::path(f);
  double prev = sup_over(s, fam, 0.05).first;
  for (int k = 0; k < 40; ++k) {
    auto r = tighten(s, fam, 0.05, 1);
    CHECK(r.sup_after <= prev);
    CHECK(same_boundary(s, r.sweepout));
    prev = r.sup_after;
    s = r.sweepout;
  }
}

TEST_CASE("tighten budget must be positive") {
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);
  CHECK_THROWS_AS(tighten(line, dw_family(), 0.0, 0), PreconditionError);
}

TEST_CASE("isotonic fit") {
  CHECK(isotonic_fit({1, 3, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(isotonic_fit({3, 2, 1}) == std::vector<double>{2, 2, 2});
  CHECK(isotonic_fit({}).empty());
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> y(30);
    for (auto& v : y) v = n(rng);
    const auto f = isotonic_fit(y);
    for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] >= f[i - 1] - 1e-15);
    double sy = 0, sf = 0;
    for (std::size_t i = 0; i < y.size(); ++i) sy += y[i], sf += f[i];
    CHECK(sf == doctest::Approx(sy));
  }
}

TEST_CASE("width curves") {
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);

  auto flat = ViscousFamily::additive(make_double_well(), zero_g(2));
  auto c0 = estimate_width_curve(line, flat, {0.0, 0.05, 0.1, 0.2}, 50);
  for (double b : c0.betas) CHECK(b == doctest::Approx(c0.betas[0]).epsilon(1e-12));

  auto fam = dw_family();
  auto c = estimate_width_curve(line, fam, {0.0, 0.05, 0.1, 0.2}, 100, true);
  CHECK(c.tightened.size() == 4);
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(c.betas[i] >= c.betas[i - 1]);
    CHECK(c.betas[i] >= c.betas[0] - 1e-9);
  }
  CHECK(c.betas[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(check_nontrivial(c, boundary_value(line, fam, 0.0), 0.1));
  CHECK(c.beta_at(0.075) == doctest::Approx(0.5 * (c.betas[1] + c.betas[2])));
  CHECK_THROWS_AS(c.beta_at(0.3), DomainError);
  CHECK_THROWS_AS(estimate_width_curve(line, fam, {0.1, 0.05}, 10), PreconditionError);
}

TEST_CASE("check_nontrivial") {
  WidthCurve c;
  c.sigmas = {0.0};
  c.betas = {1.0};
  CHECK(check_nontrivial(c, 0.0, 0.1));
  c.betas = {0.05};
  CHECK_FALSE(check_nontrivial(c, 0.0, 0.1));
  c.betas = {0.3};
  CHECK_FALSE(check_nontrivial(c, 0.3, 1e-12));
  CHECK_THROWS_AS(check_nontrivial(c, 0.0, 0.0), PreconditionError);
}

TEST_CASE("json and csv") {
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0.1), Eigen::Vector2d(1, 0.3), 17);
  nlohmann::json j = line;
  CHECK(j["frames"].size() == 34);
  const Sweepout back = j.get<Sweepout>();
  CHECK(back.size() == line.size());
  for (std::size_t i = 0; i < line.size(); ++i) CHECK((back.frames[i].array() == line.frames[i].array()).all());
  CHECK(back.boundary == line.boundary);

  auto c = estimate_width_curve(line, dw_family(), geometric_grid(0.005, 0.08, 6), 5);
  std::ostringstream os;
  write_width_csv(os, c);
  const std::string csv = os.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  const WidthCurve c2 = nlohmann::json(c).get<WidthCurve>();
  CHECK(c2.betas == c.betas);
}

TEST_CASE("geometric grid") {
  const auto g = geometric_grid(0.005, 0.08, 24);
  CHECK(g.size() == 24);
  CHECK(g.front() == 0.005);
  CHECK(g.back() == 0.08);
  for (std::size_t i = 2; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
  CHECK(geometric_grid(0.01, 0.02, 3, true).front() == 0.0);
}
