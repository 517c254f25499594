#include "vmm/registry.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vmm {

namespace {

using Params = std::vector<std::pair<std::string, std::string>>;

const std::map<std::string, Params>& table() {
  static const std::map<std::string, Params> t{
      {"double_well", {}},
      {"quadratic_saddle", {{"neg", "1"}, {"pos", "1"}}},
      {"monkey_saddle", {{"confine", "0.1"}}},
      {"planted_saddle", {{"k", "1"}}},
      {"torus_loop", {{"R", "2"}, {"r", "0.5"}, {"N", "64"}, {"reg", "bending"}}},
      {"ellipsoid_loop", {{"a", "1"}, {"c", "0.5"}, {"N", "64"}, {"reg", "bending"}}},
  };
  return t;
}

std::string join_names(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

double as_number(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw DomainError("problem parameter " + key + "=" + v + " is not a number");
  return x;
}

int as_int(const std::string& key, const std::string& v) {
  const double x = as_number(key, v);
  if (x != std::floor(x)) throw DomainError("problem parameter " + key + " must be an integer");
  return static_cast<int>(x);
}

// Shortest round-trip spelling, so canonical keys are stable.
std::string spell(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) return v;
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::pair<std::string, std::map<std::string, std::string>> parse(const std::string& key) {
  const auto colon = key.find(':');
  const std::string name = key.substr(0, colon);
  const auto it = table().find(name);
  if (it == table().end())
    throw DomainError("unknown problem '" + name + "'; valid problems: " + join_names(problem_names()));
  std::map<std::string, std::string> vals;
  for (const auto& [k, v] : it->second) vals[k] = v;
  if (colon != std::string::npos) {
    std::stringstream ss(key.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      const std::string k = item.substr(0, eq);
      if (eq == std::string::npos || !vals.count(k)) {
        std::vector<std::string> valid;
        for (const auto& p : it->second) valid.push_back(p.first);
        throw DomainError("problem " + name + ": unknown parameter '" + k + "'; valid parameters: " +
                          (valid.empty() ? std::string("none") : join_names(valid)));
      }
      vals[k] = spell(item.substr(eq + 1));
    }
  }
  return {name, vals};
}

Sweepout polyline(const std::vector<Point>& corners, int frames) {
  std::vector<double> len{0.0};
  for (std::size_t i = 1; i < corners.size(); ++i) len.push_back(len.back() + (corners[i] - corners[i - 1]).norm());
  std::vector<Point> f;
  for (int j = 0; j < frames; ++j) {
    const double s = len.back() * j / (frames - 1);
    std::size_t i = 1;
    while (i + 1 < corners.size() && len[i] < s) ++i;
    const double t = (s - len[i - 1]) / (len[i] - len[i - 1]);
    f.push_back(corners[i - 1] + std::min(1.0, t) * (corners[i] - corners[i - 1]));
  }
  f.front() = corners.front();
  f.back() = corners.back();
  return Sweepout::path(std::move(f));
}

// Loops u -> (u, v_t) with v_t running linearly from v0 to v1.
Sweepout latitude_sweep(int nodes, double v0, double v1, int frames) {
  std::vector<Point> f;
  for (int j = 0; j < frames; ++j) {
    const double v = v0 + (v1 - v0) * j / (frames - 1);
    f.push_back(sample_loop(nodes, [v](double t) { return std::array<double, 2>{t, v}; }));
  }
  return Sweepout::path(std::move(f));
}

ViscousFamily loop_family(const std::string& reg, int nodes, const SurfaceChart& chart) {
  if (reg == "alpha") return make_alpha_family(nodes, chart);
  if (reg == "bending")
    return ViscousFamily::additive(make_alpha_energy(nodes, 0.0, chart),
                                   make_loop_bending(chart, LoopConfig{nodes, true}));
  throw DomainError("loop regularizer must be 'bending' or 'alpha', got '" + reg + "'");
}

}  // namespace

std::vector<std::string> problem_names() {
  std::vector<std::string> v;
  for (const auto& [k, _] : table()) v.push_back(k);
  return v;
}

std::vector<std::pair<std::string, std::string>> problem_parameters(const std::string& name) {
  const auto it = table().find(name);
  if (it == table().end())
    throw DomainError("unknown problem '" + name + "'; valid problems: " + join_names(problem_names()));
  return it->second;
}

std::string canonical_problem_key(const std::string& key) {
  const auto [name, vals] = parse(key);
  std::string s = name;
  const auto& order = table().at(name);
  for (std::size_t i = 0; i < order.size(); ++i)
    s += (i == 0 ? ":" : ",") + order[i].first + "=" + vals.at(order[i].first);
  return s;
}

Problem make_problem(const std::string& key, int frames) {
  if (frames < kMinPathFrames)
    throw DomainError("seed sweepout needs at least " + std::to_string(kMinPathFrames) + " frames");
  const auto [name, vals] = parse(key);
  auto num = [&](const std::string& k) { return as_number(k, vals.at(k)); };
  auto quartic = [](Eigen::Index n) { return make_quartic(n); };
  constexpr double pi = std::numbers::pi;

  auto build = [&]() -> Problem {
    if (name == "double_well") {
      return Problem{.name = name, .family = ViscousFamily::additive(make_double_well(), quartic(2)),
                     .seed = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), frames)};
    }
    if (name == "quadratic_saddle") {
      const int neg = as_int("neg", vals.at("neg")), pos = as_int("pos", vals.at("pos"));
      const auto f = make_quadratic_saddle(neg, pos);
      const Eigen::Index n = neg + pos;
      return Problem{.name = name, .family = ViscousFamily::additive(f, quartic(n)),
                     .seed = Sweepout::straight_line(-Vector::Unit(n, 0), Vector::Unit(n, 0), frames)};
    }
    if (name == "monkey_saddle") {
      const auto f = make_monkey_saddle(num("confine"));
      return Problem{.name = name, .family = ViscousFamily::additive(f, quartic(2)),
                     .seed = polyline({Eigen::Vector2d(-1, 0), Eigen::Vector2d(-0.05, 0.08),
                                       Eigen::Vector2d(0.5, std::sqrt(3.0) / 2)},
                                      frames)};
    }
    if (name == "planted_saddle") {
      const double k = num("k");
      if (!(k > 0.0 && k < 2.0)) throw DomainError("planted_saddle: k must lie in (0, 2)");
      return Problem{.name = name, .family = ViscousFamily::additive(make_planted_saddle(k), quartic(2)),
                     .seed = Sweepout::straight_line(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), frames)};
    }
    const int N = as_int("N", vals.at("N"));
    if (N < kMinLoopNodes) throw DomainError("loop problems need N >= " + std::to_string(kMinLoopNodes));
    if (name == "torus_loop") {
      const double R = num("R"), r = num("r");
      if (!(r > 0.0 && R > r)) throw DomainError("torus_loop: need R > r > 0");
      auto chart = torus_chart(R, r);
      // Parallels from just beside the inner equator, over the outer one, and back.
      Problem p{.name = name, .family = loop_family(vals.at("reg"), N, chart),
                .seed = latitude_sweep(N, pi + 1.0, 3 * pi - 1.0, frames)};
      p.chart = chart;
      p.nodes = N;
      return p;
    }
    const double a = num("a"), c = num("c");
    if (!(a > 0.0 && c > 0.0)) throw DomainError("ellipsoid_loop: axes must be positive");
    auto chart = ellipsoid_chart(a, c);
    // Latitude circles from a small circle near the south pole to one near the north pole.
    Problem p{.name = name, .family = loop_family(vals.at("reg"), N, chart),
              .seed = latitude_sweep(N, -1.3, 1.3, frames)};
    p.chart = chart;
    p.nodes = N;
    return p;
  };

  Problem p = build();
  p.key = canonical_problem_key(key);
  p.params = vals;
  return p;
}

}  // namespace vmm
