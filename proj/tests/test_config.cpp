#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vmm/config.hpp"
#include "vmm/registry.hpp"

using namespace vmm;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("registry names and canonical keys") {
  const auto names = problem_names();
  CHECK(names.size() == 6);
  CHECK(canonical_problem_key("double_well") == "double_well");
  CHECK(canonical_problem_key("torus_loop") == "torus_loop:R=2,r=0.5,N=64,reg=bending");
  CHECK(canonical_problem_key("ellipsoid_loop:c=2.0,a=1") == "ellipsoid_loop:a=1,c=2,N=64,reg=bending");
  CHECK(canonical_problem_key("quadratic_saddle:neg=2") == "quadratic_saddle:neg=2,pos=1");

  const auto m = message_of([] { make_problem("no_such"); });
  CHECK(contains(m, "unknown problem 'no_such'"));
  for (const auto& n : names) CHECK(contains(m, n));

  const auto mp = message_of([] { make_problem("torus_loop:R=2,q=1"); });
  CHECK(contains(mp, "unknown parameter 'q'"));
  CHECK(contains(mp, "R, r, N, reg"));
  CHECK(contains(message_of([] { make_problem("double_well:x=1"); }), "valid parameters: none"));
  CHECK(contains(message_of([] { make_problem("torus_loop:R=abc"); }), "not a number"));
  CHECK_THROWS_AS(make_problem("torus_loop:R=0.2,r=0.5"), DomainError);
  CHECK_THROWS_AS(make_problem("torus_loop:N=4"), DomainError);
  CHECK_THROWS_AS(make_problem("planted_saddle:k=3"), DomainError);
  CHECK_THROWS_AS(make_problem("double_well", 3), DomainError);
}

TEST_CASE("registry problems have consistent seeds") {
  for (const auto& n : problem_names()) {
    CAPTURE(n);
    const auto p = make_problem(n, 17);
    CHECK(p.key == canonical_problem_key(n));
    CHECK(p.seed.size() == 17);
    CHECK(p.seed.dim() == p.family.dim());
    CHECK_NOTHROW(p.seed.validate());
    CHECK(std::isfinite(p.family.value(0.01, p.seed.frames[8])));
    CHECK(p.chart.has_value() == (p.nodes > 0));
  }
  const auto q = make_problem("quadratic_saddle:neg=2,pos=3");
  CHECK(q.family.dim() == 5);
  const auto t = make_problem("torus_loop:N=16,reg=alpha");
  CHECK(t.family.dim() == 32);
  CHECK_FALSE(t.family.is_additive());
  // planted_saddle: the hill at the origin sits at level 1, the passes at k - k^2/4.
  const auto ps = make_problem("planted_saddle:k=1");
  CHECK(ps.family.base_value(Vector::Zero(2)) == 1.0);
  CHECK(ps.family.base_value(Eigen::Vector2d(0, std::sqrt(0.5))) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(ps.family.base().gradient(Eigen::Vector2d(0, std::sqrt(0.5))).norm() < 1e-14);
}

TEST_CASE("config defaults, keys and overrides") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  const auto keys = config_keys();
  CHECK(keys.front().first == "problem.key");
  CHECK(keys.size() == 30);
  for (const auto& [k, d] : keys) {
    CAPTURE(k);
    CHECK_FALSE(d.empty());
    CHECK_NOTHROW(get_config_value(c, k));
  }

  apply_override(c, "grid.n=5");
  apply_override(c, "perturb.epsilons = 0.5, 0.25");
  apply_override(c, "problem.key=ellipsoid_loop:c=2");
  CHECK(c.grid.n == 5);
  CHECK(c.perturb.epsilons == std::vector<double>{0.5, 0.25});
  CHECK(c.problem == "ellipsoid_loop:a=1,c=2,N=64,reg=bending");

  const auto m = message_of([&] { apply_override(c, "grid.nn=3"); });
  CHECK(contains(m, "unknown config key 'grid.nn'"));
  CHECK(contains(m, "grid.lo"));
  CHECK(contains(m, "perturb.policy"));
  CHECK_THROWS_AS(apply_override(c, "grid.n"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "grid.n=2.5"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "grid.zero=maybe"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "family.kind=sideways"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "problem.key=nothing"), ConfigError);
}

TEST_CASE("config validation") {
  auto bad = [](const std::string& kv) {
    RunConfig c;
    apply_override(c, kv);
    return message_of([&] { c.validate(); });
  };
  CHECK(contains(bad("grid.hi=0.1"), "e^-e"));
  CHECK(contains(bad("grid.lo=0.07"), "grid"));
  CHECK(contains(bad("budget.surgery=9"), "capped at 8"));
  CHECK(contains(bad("perturb.epsilons=0.1,0.2"), "strictly decreasing"));
  CHECK(contains(bad("perturb.policy=ignore"), "perturb or report"));
  CHECK(contains(bad("family.d=3"), "family.d"));
  CHECK(contains(bad("problem.frames=4"), "problem.frames"));
}

TEST_CASE("config text round trip") {
  RunConfig c;
  apply_override(c, "problem.key=torus_loop:R=3");
  apply_override(c, "grid.spacing=geometric");
  apply_override(c, "tolerance.gap=0.001");
  apply_override(c, "family.kind=dual");
  apply_override(c, "grid.lo=0.1234567890123456789e-2");
  const auto text = emit_config(c);
  const auto back = parse_config(text);
  CHECK(emit_config(back) == text);
  CHECK(back.grid.lo == c.grid.lo);
  CHECK(back.kind == FamilyKind::dual);
  CHECK(back.problem == c.problem);

  const auto parsed = parse_config(
      "# comment\n[problem]\nkey = planted_saddle ; trailing\n\n[grid]\nn = 7\nzero=false\n");
  CHECK(parsed.problem == "planted_saddle:k=1");
  CHECK(parsed.grid.n == 7);
  CHECK_FALSE(parsed.grid.zero);

  const auto m = message_of([] { parse_config("[grid]\nn = 3\nbogus = 1\n"); });
  CHECK(contains(m, "line 3"));
  CHECK(contains(m, "grid.bogus"));
  CHECK(contains(message_of([] { parse_config("[grid\n"); }), "unterminated"));
  CHECK(contains(message_of([] { parse_config("[grid]\nn 3\n"); }), "key = value"));
}

TEST_CASE("config files") {
  const auto m = message_of([] { load_config("/nonexistent/run.cfg"); });
  CHECK(contains(m, "/nonexistent/run.cfg"));
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "vmm_test_config.cfg";
  {
    std::ofstream os(path);
    os << "[grid]\nn = oops\n";
  }
  const auto mf = message_of([&] { load_config(path.string()); });
  CHECK(contains(mf, path.string()));
  CHECK(contains(mf, "grid.n"));
  std::filesystem::remove(path);
}

TEST_CASE("sigma grids") {
  RunConfig c;
  apply_override(c, "grid.n=4");
  apply_override(c, "grid.lo=0.01");
  apply_override(c, "grid.hi=0.04");
  const auto g = c.sigma_grid();
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.01);
  CHECK(g[2] == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(g[4] == 0.04);
  apply_override(c, "grid.zero=false");
  apply_override(c, "grid.spacing=geometric");
  const auto h = c.sigma_grid();
  REQUIRE(h.size() == 4);
  CHECK(h[1] == doctest::Approx(0.01 * std::cbrt(4.0)).epsilon(1e-14));
  CHECK(h[0] == 0.01);
  CHECK(h[3] == 0.04);
}
