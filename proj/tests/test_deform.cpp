#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "vmm/critical.hpp"
#include "vmm/deform.hpp"
#include "vmm/functionals.hpp"

using namespace vmm;

namespace {

ViscousFamily with_quartic(const FunctionalHandle& f) { return ViscousFamily::additive(f, make_quartic(f.dim())); }

MorseChart chart_at(const ViscousFamily& fam, const Point& x, double sigma = 0.0) {
  return build_chart(refine(x, fam, sigma), fam, sigma);
}

Vector ball_sample(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v * (radius * u(rng) / v.norm());
}

ChartPoint split(const Vector& z, int k) { return {z.head(k), z.tail(z.size() - k)}; }

}  // namespace

TEST_CASE("cutoff profiles") {
  const CutoffZeta zeta;
  CHECK(zeta(0.0) == 0.0);
  CHECK(zeta(1.0) == 1.0);
  CHECK(zeta(-3.0) == 0.0);
  CHECK(zeta(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = zeta(i / 1000.0);
    CHECK(v >= prev);
    prev = v;
  }
  for (double t : {0.1, 0.3, 0.62, 0.9}) {
    const auto s = CutoffZeta::eval(t);
    const double h = 1e-5;
    CHECK(s[1] == doctest::Approx((zeta(t + h) - zeta(t - h)) / (2 * h)).epsilon(1e-7));
    CHECK(s[2] == doctest::Approx((CutoffZeta::eval(t + h)[1] - CutoffZeta::eval(t - h)[1]) / (2 * h)).epsilon(1e-6));
  }
  const CutoffEta eta;
  CHECK(eta(0.0) == 1.0);
  CHECK(eta(2.25) == 1.0);
  CHECK(eta(4.0) == 0.0);
  CHECK(eta(10.0) == 0.0);
  CHECK(eta(3.0) > 0.0);
  CHECK(eta(3.0) < 1.0);
}

TEST_CASE("radii fitting rule") {
  CHECK(chart_delta_bound(0.1, 0.3) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(chart_delta(0.1, 0.3) == doctest::Approx(0.025).epsilon(1e-14));
  CHECK_THROWS_AS(chart_delta(0.2, 0.3), DomainError);
}

TEST_CASE("exact quadratic chart") {
  auto q = with_quartic(make_quadratic_saddle(1, 1));
  auto c = chart_at(q, Eigen::Vector2d(0.01, -0.02));
  CHECK(c.validity_radius() == 1.0);
  CHECK(chart_model_error(c, q, 1.0) < 1e-14);
  CHECK(c.r2() == 0.5);
  CHECK(c.r1() == 0.125);
  CHECK(c.delta() == doctest::Approx((0.25 - 4 * 0.125 * 0.125) / 2));
}

TEST_CASE("double-well chart basis and scales") {
  auto dw = with_quartic(make_double_well());
  auto c = chart_at(dw, Eigen::Vector2d(0.02, 0.01));
  CHECK(c.index() == 1);
  CHECK(c.scales()[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(c.scales()[1] == doctest::Approx(std::sqrt(10.0)).epsilon(1e-10));
  CHECK(std::abs(c.basis()(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(c.basis()(1, 1)) == doctest::Approx(1.0));
  CHECK(c.validity_radius() > 0.0);
  CHECK(c.validity_radius() < 1.0);
  CHECK(chart_model_error(c, dw, c.validity_radius()) < c.delta() / 4);
}

TEST_CASE("degenerate record is refused") {
  auto mk = with_quartic(make_monkey_saddle(0.0));
  CHECK_THROWS_AS(build_chart(make_record(mk, 0.0, Vector::Zero(2)), mk, 0.0), PreconditionError);
}

TEST_CASE("deform_phi on the normal form") {
  auto q = with_quartic(make_quadratic_saddle(1, 1));
  const Matrix h = q.hessian(0.0, Vector::Zero(2));
  const auto c = MorseChart::normal_form(Vector::Zero(2), 0.0, h, 0.1, 0.3);
  const Point x = Eigen::Vector2d(0.1, 0.05);
  CHECK(q.value(0.0, x) == doctest::Approx(-0.0075).epsilon(1e-14));
  const Point y = deform_phi(x, c);
  CHECK(y[1] == 0.0);
  CHECK(q.value(0.0, y) == doctest::Approx(-0.01).epsilon(1e-14));
  CHECK(c.to_chart(y).neg.norm() == doctest::Approx(0.1).epsilon(1e-15));

  // Saturated cutoff and points outside the cylinder are left alone bitwise.
  const Point far = Eigen::Vector2d(0.2, 0.05);
  CHECK(deform_phi(far, c) == far);
  const Point tall = Eigen::Vector2d(0.05, 0.31);
  CHECK(deform_phi(tall, c) == tall);
  const Point mid = Eigen::Vector2d(0.15, 0.2);
  CHECK(deform_phi(mid, c)[1] == doctest::Approx(0.2 * CutoffZeta()(0.5)));
}

TEST_CASE("deformation never raises F and lands on the disc boundary") {
  struct Case {
    ViscousFamily fam;
    Point x;
  };
  std::vector<Case> cases{
      {with_quartic(make_double_well()), Eigen::Vector2d(0.01, 0.01)},
      {with_quartic(make_planted_saddle(1.0)), Eigen::Vector2d(0.01, 0.01)},
      {with_quartic(make_planted_saddle(1.0)), Eigen::Vector2d(0.01, 0.7)},
      {with_quartic(make_quadratic_saddle(2, 1, Eigen::Vector3d(1.0, 3.0, 0.5))), Eigen::Vector3d(0.1, 0, 0)},
  };
  std::mt19937_64 rng(5);
  for (const auto& cs : cases) {
    const auto c = chart_at(cs.fam, cs.x);
    const int k = c.index();
    const Eigen::Index n = c.dim();
    int violations = 0, landed = 0;
    for (int i = 0; i < 2000; ++i) {
      const Point x = c.from_chart(split(ball_sample(rng, n, c.validity_radius()), k));
      if (cs.fam.value(0.0, deform_phi(x, c)) > cs.fam.value(0.0, x) + 1e-12) ++violations;
    }
    CHECK(violations == 0);
    for (int i = 0; i < 2000; ++i) {
      Vector zn = ball_sample(rng, k, 1.0);
      if (k > 0) zn *= c.r1() / zn.norm();
      const Vector zp = ball_sample(rng, n - k, c.r2());
      const Point x = c.from_chart({zn, zp});
      if (cs.fam.value(0.0, x) > c.level() + c.delta()) continue;
      const ChartPoint z = c.to_chart(deform_phi(x, c));
      CHECK(std::abs(z.neg.norm() - c.r1()) <= 1e-10 + (k == 0 ? c.r1() : 0.0));
      CHECK(z.pos.norm() <= 1e-10);
      ++landed;
    }
    CHECK(landed > 0);
  }
}

TEST_CASE("admissible surgery on an index-2 saddle") {
  auto q = with_quartic(make_quadratic_saddle(2, 1));
  const auto c = chart_at(q, Eigen::Vector3d(0.01, 0.01, 0.01));
  REQUIRE(c.index() == 2);
  auto line = Sweepout::straight_line(Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(1, 0, 0), 33);
  SurgeryReport rep;
  const auto out = surgery_admissible(line, c, q, 0.0, &rep);
  CHECK(rep.frames_projected > 0);
  CHECK(rep.sup_after <= rep.sup_before + 1e-12);
  CHECK(out.frames.front() == line.frames.front());
  CHECK(out.frames.back() == line.frames.back());
  CHECK(out.boundary.front());
  CHECK(out.boundary.back());
  double sup = -1e300;
  int on_sphere = 0;
  for (const auto& f : out.frames) {
    const auto z = c.to_chart(f);
    CHECK(std::sqrt(z.neg.squaredNorm() + z.pos.squaredNorm()) >= c.r1() / 2);
    if (std::abs(z.neg.norm() - c.r1()) <= 1e-12 && z.pos.norm() <= 1e-12) ++on_sphere;
    sup = std::max(sup, q.value(0.0, f));
  }
  CHECK(on_sphere >= rep.frames_projected);
  CHECK(sup <= 1e-12);

  const auto back = nlohmann::json(rep).get<SurgeryReport>();
  CHECK(back.missed_point == rep.missed_point);
  CHECK(nlohmann::json(back) == nlohmann::json(rep));
}

TEST_CASE("admissible surgery preconditions") {
  auto q = with_quartic(make_quadratic_saddle(1, 1));
  const auto c = chart_at(q, Eigen::Vector2d(0.01, 0.01));
  auto line = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), 33);
  CHECK_THROWS_WITH_AS(surgery_admissible(line, c, q, 0.0), doctest::Contains("index within bound"),
                       PreconditionError);

  auto q2 = with_quartic(make_quadratic_saddle(2, 1));
  const auto c2 = chart_at(q2, Eigen::Vector3d(0.01, 0.01, 0.01));
  auto away = Sweepout::straight_line(Eigen::Vector3d(-1, 0, 0.9), Eigen::Vector3d(1, 0, 0.9), 33);
  // Shifted along a negative direction the path misses C(2 r1, r2); along x+ its sup exceeds level + delta.
  auto low = Sweepout::straight_line(Eigen::Vector3d(-1, 0.9, 0), Eigen::Vector3d(1, 0.9, 0), 33);
  const auto out = surgery_admissible(low, c2, q2, 0.0);
  CHECK(out.frames == low.frames);
  CHECK_THROWS_AS(surgery_admissible(away, c2, q2, 0.0), PreconditionError);
}

TEST_CASE("dual surgery removes frames near a minimum") {
  auto dw = with_quartic(make_double_well());
  const auto c = chart_at(dw, Eigen::Vector2d(1.01, 0.0));
  REQUIRE(c.index() == 0);
  std::vector<Point> frames;
  for (int i = 0; i < 41; ++i) frames.push_back(Eigen::Vector2d(0.5 + i * 0.025, 0.0));
  auto set = Sweepout::path(frames);
  SurgeryReport rep;
  const auto out = surgery_dual(set, c, dw, 0.0, &rep);
  CHECK(rep.frames_deleted > 0);
  CHECK(out.size() + rep.frames_deleted == set.size());
  for (const auto& f : out.frames) CHECK(!c.in_cylinder(c.to_chart(f), c.r1(), c.r2(), true));

  std::vector<Point> far_frames;
  for (int i = 0; i < 20; ++i) far_frames.push_back(Eigen::Vector2d(-1.5 + i * 0.01, 0.0));
  auto far = Sweepout::path(far_frames);
  CHECK(surgery_dual(far, c, dw, 0.0).frames == far.frames);

  std::vector<Point> inside(20, Point(Eigen::Vector2d(1.0, 0.0)));
  for (int i = 0; i < 20; ++i) inside[i][1] = 1e-4 * i;
  CHECK_THROWS_AS(surgery_dual(Sweepout::path(inside), c, dw, 0.0), PreconditionError);

  const auto saddle = chart_at(dw, Eigen::Vector2d(0.01, 0.0));
  CHECK_THROWS_AS(surgery_dual(set, saddle, dw, 0.0), PreconditionError);
}

TEST_CASE("index bound certification") {
  CriticalPointRecord r;
  r.morse = MorseData{};
  r.morse->index = 1;
  CHECK(certify_index_bound(r, 1, FamilyKind::admissible));
  r.morse->index = 2;
  CHECK_FALSE(certify_index_bound(r, 1, FamilyKind::admissible));
  r.morse->index = 1;
  r.morse->nullity = 1;
  CHECK(certify_index_bound(r, 2, FamilyKind::codual));
  CHECK_FALSE(certify_index_bound(r, 2, FamilyKind::dual));
  CHECK(parse_family_kind("dual") == FamilyKind::dual);
  CHECK_THROWS_AS(parse_family_kind("other"), DomainError);
  CHECK_THROWS_AS(certify_index_bound(CriticalPointRecord{}, 1, FamilyKind::admissible), PreconditionError);
}

TEST_CASE("chart json round trip") {
  auto dw = with_quartic(make_double_well());
  const auto c = chart_at(dw, Eigen::Vector2d(0.02, 0.01));
  const auto back = nlohmann::json(c).get<MorseChart>();
  CHECK(back.center() == c.center());
  CHECK(back.basis() == c.basis());
  CHECK(back.r1() == c.r1());
  CHECK(back.delta() == c.delta());
  CHECK(back.linear());
  CHECK(nlohmann::json(back) == nlohmann::json(c));
}
