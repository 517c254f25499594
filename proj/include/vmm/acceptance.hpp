#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace vmm {

struct AcceptanceRow {
  int id = 0;
  std::string name;
  bool pass = false;
  /// Failure that was analysed beforehand and is expected with the pinned inputs.
  bool known_gap = false;
  std::string expected;
  std::string actual;
  std::string tolerance;
  std::string reason;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::string filter;  ///< substring of the check name; empty runs everything
  /// Replaces entries of acceptance_tolerances(); unknown names throw ConfigError.
  std::map<std::string, double> tolerances;
};

std::vector<std::string> acceptance_names();
/// Pinned tolerances and runtime limits, keyed "check.quantity".
std::map<std::string, double> acceptance_tolerances();

/// Runs the selected checks in order; each finished row is also written to `progress` if given.
std::vector<AcceptanceRow> run_acceptance(const AcceptanceOptions& options = {}, std::ostream* progress = nullptr);

std::string format_row(const AcceptanceRow& row);
std::string format_table(const std::vector<AcceptanceRow>& rows);

bool all_pass(const std::vector<AcceptanceRow>& rows);
/// True when every failure is a known gap.
bool only_known_gaps(const std::vector<AcceptanceRow>& rows);

}  // namespace vmm
