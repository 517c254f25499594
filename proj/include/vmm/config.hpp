#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vmm/deform.hpp"

namespace vmm {

/// Raised for malformed or inconsistent configuration; the CLI maps it to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridConfig {
  double lo = 0.005;
  double hi = 0.06;
  int n = 12;
  bool zero = true;  ///< prepend sigma = 0 (needed for beta(0) and the non-triviality check)
  std::string spacing = "linear";  ///< linear | geometric
};

struct BudgetConfig {
  int tighten = 200;
  int refine = 200;
  int locate = 100;
  int surgery = 8;  ///< critical points handled per level by the surgery loop
  int retighten = 400;
  int resample = 10;  ///< tilt draws per epsilon in the degenerate branch
};

struct PerturbConfig {
  double delta = 0.2;
  std::vector<double> epsilons{0.1, 0.01, 0.001};
  std::string policy = "perturb";  ///< perturb | report
};

struct RunConfig {
  std::string problem = "double_well";
  int frames = 33;
  FamilyKind kind = FamilyKind::admissible;
  int d = 1;
  GridConfig grid;
  int window_steps = 2;
  int max_sigmas = 0;  ///< 0 processes every entropy-selected sigma
  double nontrivial_margin = 1e-3;
  ToleranceProfile tol;
  BudgetConfig budget;
  PerturbConfig perturb;
  double chart_max_radius = 1.0;
  unsigned long long seed = 42;
  std::string output = "out";

  /// Throws ConfigError naming the offending key.
  void validate() const;
  std::vector<double> sigma_grid() const;
};

/// Every dotted key with its one-line description, in emission order.
std::vector<std::pair<std::string, std::string>> config_keys();

/// Set one dotted key. Unknown keys throw ConfigError listing the valid keys.
void set_config_value(RunConfig& c, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& c, const std::string& key);
/// "key=value" form used for command-line overrides.
void apply_override(RunConfig& c, const std::string& assignment);

/// Sections in brackets, `key = value` lines, '#' or ';' comments.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Normalized text; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const RunConfig& c);

}  // namespace vmm
