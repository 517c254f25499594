#include "vmm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "vmm/registry.hpp"
#include "vmm/sweepout.hpp"

namespace vmm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const std::string t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const std::string t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define VMM_REAL(K, M, H) \
  Field{K, H, [](const RunConfig& c) { return fmt(c.M); }, [](RunConfig& c, const std::string& v) { c.M = to_real(K, v); }}
#define VMM_INT(K, M, H) \
  Field{K, H, [](const RunConfig& c) { return std::to_string(c.M); }, [](RunConfig& c, const std::string& v) { c.M = to_int(K, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      Field{"problem.key", "problem registry key, e.g. double_well or ellipsoid_loop:a=1,c=2,N=64",
            [](const RunConfig& c) { return c.problem; },
            [](RunConfig& c, const std::string& v) { c.problem = canonical_problem_key(trim(v)); }},
      VMM_INT("problem.frames", frames, "frames in the seed sweepout"),
      Field{"family.kind", "admissible | dual | codual", [](const RunConfig& c) { return to_string(c.kind); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.kind = parse_family_kind(trim(v));
              } catch (const DomainError& e) {
                throw ConfigError(std::string("family.kind: ") + e.what());
              }
            }},
      VMM_INT("family.d", d, "parameter dimension of the family"),
      VMM_REAL("grid.lo", grid.lo, "smallest positive sigma"),
      VMM_REAL("grid.hi", grid.hi, "largest sigma, below e^-e"),
      VMM_INT("grid.n", grid.n, "number of positive grid points"),
      Field{"grid.zero", "prepend sigma = 0", [](const RunConfig& c) { return std::string(c.grid.zero ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.grid.zero = to_bool("grid.zero", v); }},
      Field{"grid.spacing", "linear | geometric", [](const RunConfig& c) { return c.grid.spacing; },
            [](RunConfig& c, const std::string& v) { c.grid.spacing = trim(v); }},
      VMM_INT("entropy.window_steps", window_steps, "grid steps in the beta' difference quotient"),
      VMM_INT("entropy.max_sigmas", max_sigmas, "selected sigmas to process, 0 = all"),
      VMM_REAL("tolerance.grad", tol.grad, "gradient norm of refined critical points"),
      VMM_REAL("tolerance.null_rel", tol.null_rel, "nullity band relative to the Hessian norm"),
      VMM_REAL("tolerance.null_abs", tol.null_abs, "absolute floor of the nullity band"),
      VMM_REAL("tolerance.gap", tol.gap, "spectral gap certifying non-degeneracy"),
      VMM_REAL("tolerance.fd_step", tol.fd_step, "finite-difference step"),
      VMM_REAL("tolerance.reverify", tol.reverify, "re-verification tolerance of emitted records"),
      VMM_INT("budget.tighten", budget.tighten, "tightening iterations per grid sigma"),
      VMM_INT("budget.refine", budget.refine, "Newton iterations in refine"),
      VMM_INT("budget.locate", budget.locate, "damped-Newton iterations per locate seed"),
      VMM_INT("budget.surgery", budget.surgery, "surgery rounds per sigma (at most 8)"),
      VMM_INT("budget.retighten", budget.retighten, "tightening iterations after each surgery"),
      VMM_INT("budget.resample", budget.resample, "tilt draws per epsilon"),
      VMM_REAL("perturb.delta", perturb.delta, "bump radius around a degenerate point"),
      Field{"perturb.epsilons", "decreasing C^2 budgets, comma separated",
            [](const RunConfig& c) {
              std::string s;
              for (double e : c.perturb.epsilons) s += (s.empty() ? "" : ",") + fmt(e);
              return s;
            },
            [](RunConfig& c, const std::string& v) {
              c.perturb.epsilons.clear();
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ','))
                if (!trim(item).empty()) c.perturb.epsilons.push_back(to_real("perturb.epsilons", item));
            }},
      Field{"perturb.policy", "perturb | report", [](const RunConfig& c) { return c.perturb.policy; },
            [](RunConfig& c, const std::string& v) { c.perturb.policy = trim(v); }},
      VMM_REAL("chart.max_radius", chart_max_radius, "cap on the Morse chart validity radius"),
      VMM_REAL("run.nontrivial_margin", nontrivial_margin, "required gap between beta(0) and the boundary value"),
      Field{"run.seed", "random seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) {
              const long long x = to_integer("run.seed", v);
              if (x < 0) throw ConfigError("run.seed: must be nonnegative");
              c.seed = static_cast<unsigned long long>(x);
            }},
      Field{"run.output", "output directory", [](const RunConfig& c) { return c.output; },
            [](RunConfig& c, const std::string& v) { c.output = trim(v); }},
  };
  return f;
}

#undef VMM_REAL
#undef VMM_INT

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  std::string valid;
  for (const auto& f : fields()) valid += (valid.empty() ? "" : ", ") + f.key;
  throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> v;
  for (const auto& f : fields()) v.emplace_back(f.key, f.help);
  return v;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  try {
    field(key).set(c, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string get_config_value(const RunConfig& c, const std::string& key) { return field(key).get(c); }

void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set_config_value(c, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::validate() const {
  auto positive = [](const std::string& k, double v) {
    if (!(v > 0)) throw ConfigError(k + " must be positive");
  };
  positive("problem.frames", frames);
  if (frames < kMinPathFrames) throw ConfigError("problem.frames must be at least " + std::to_string(kMinPathFrames));
  if (d != 1 && d != 2) throw ConfigError("family.d must be 1 or 2");
  if (!(grid.lo > 0.0 && grid.hi > grid.lo && grid.hi < kEntropySigmaMax))
    throw ConfigError("grid must satisfy 0 < grid.lo < grid.hi < e^-e = " + std::to_string(kEntropySigmaMax));
  if (grid.n < 2) throw ConfigError("grid.n must be at least 2");
  if (grid.spacing != "linear" && grid.spacing != "geometric")
    throw ConfigError("grid.spacing must be linear or geometric");
  positive("entropy.window_steps", window_steps);
  if (max_sigmas < 0) throw ConfigError("entropy.max_sigmas must be nonnegative");
  positive("run.nontrivial_margin", nontrivial_margin);
  positive("tolerance.grad", tol.grad);
  positive("tolerance.null_rel", tol.null_rel);
  positive("tolerance.null_abs", tol.null_abs);
  positive("tolerance.gap", tol.gap);
  positive("tolerance.fd_step", tol.fd_step);
  positive("tolerance.reverify", tol.reverify);
  positive("budget.tighten", budget.tighten);
  positive("budget.refine", budget.refine);
  positive("budget.locate", budget.locate);
  positive("budget.surgery", budget.surgery);
  if (budget.surgery > 8) throw ConfigError("budget.surgery is capped at 8");
  positive("budget.retighten", budget.retighten);
  positive("budget.resample", budget.resample);
  positive("perturb.delta", perturb.delta);
  if (perturb.epsilons.empty()) throw ConfigError("perturb.epsilons must not be empty");
  for (std::size_t i = 0; i < perturb.epsilons.size(); ++i) {
    positive("perturb.epsilons", perturb.epsilons[i]);
    if (i > 0 && !(perturb.epsilons[i] < perturb.epsilons[i - 1]))
      throw ConfigError("perturb.epsilons must be strictly decreasing");
  }
  if (perturb.policy != "perturb" && perturb.policy != "report")
    throw ConfigError("perturb.policy must be perturb or report");
  positive("chart.max_radius", chart_max_radius);
  if (output.empty()) throw ConfigError("run.output must not be empty");
  canonical_problem_key(problem);
}

std::vector<double> RunConfig::sigma_grid() const {
  if (grid.spacing == "geometric") return geometric_grid(grid.lo, grid.hi, grid.n, grid.zero);
  std::vector<double> g;
  if (grid.zero) g.push_back(0.0);
  for (int i = 0; i < grid.n; ++i) g.push_back(grid.lo + (grid.hi - grid.lo) * i / (grid.n - 1));
  g.back() = grid.hi;
  return g;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got '" + t + "'");
    const std::string k = trim(t.substr(0, eq));
    const std::string key = section.empty() ? k : section + "." + k;
    try {
      set_config_value(c, key, t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string emit_config(const RunConfig& c) {
  std::string out, section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + s + "]\n";
      section = s;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace vmm
