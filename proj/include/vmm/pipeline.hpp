#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vmm/config.hpp"
#include "vmm/critical.hpp"
#include "vmm/deform.hpp"
#include "vmm/entropy.hpp"
#include "vmm/perturb.hpp"
#include "vmm/registry.hpp"

namespace vmm {

/// One epsilon of the degenerate branch.
struct PerturbationRun {
  double epsilon = 0.0;
  int tries = 0;
  CertifyStatus status = CertifyStatus::inconclusive;
  PerturbationSpec spec;  ///< the last draw
  std::vector<CriticalPointRecord> records;
};

/// Everything produced for one entropy-selected sigma.
struct SigmaResult {
  double sigma = 0.0;
  double sigma_k = 0.0;
  std::optional<NearCriticalCertificate> near_critical;
  CriticalPointRecord record;
  std::vector<CriticalPointRecord> superseded;  ///< records replaced by the surgery loop
  std::vector<SurgeryReport> surgeries;
  std::vector<PerturbationRun> perturbations;
  std::optional<bool> semicontinuity_ok;
  bool grad_ok = false;
  bool entropy_ok = false;
  bool index_bound_ok = false;
  std::vector<std::string> notes;
};

struct RunRecord {
  RunConfig config;
  double boundary_value = 0.0;
  bool nontrivial = false;
  WidthCurve curve;  ///< tightened sweepouts are not serialized
  std::vector<EntropyCertificate> certificates;
  std::vector<SigmaResult> results;
  std::map<std::string, double> timings;  ///< seconds per stage; excluded from determinism
  std::map<std::string, bool> checks;
  bool complete = true;
  std::vector<std::string> notes;
};

/// The full pipeline: width curve, entropy selection, localization, refinement, the degenerate
/// branch and the surgery loop. Throws ConfigError for invalid configs and PreconditionError
/// when the family is trivial (beta(0) not above the boundary).
RunRecord run(const RunConfig& config);

/// Recompute gradient norm, index and entropy residual of a record from the registry.
bool reverify(const CriticalPointRecord& record, const Problem& problem, const ToleranceProfile& tol);

/// run.json, width.csv, critical_points.csv, plotdata/beta_entropy.csv, plotdata/spectra.csv.
void emit(const RunRecord& record, const std::string& dir);
RunRecord load_run(const std::string& path);

/// run.json content without timings.
nlohmann::json deterministic_json(const RunRecord& record);

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
void to_json(nlohmann::json& j, const PerturbationRun& p);
void from_json(const nlohmann::json& j, PerturbationRun& p);
void to_json(nlohmann::json& j, const SigmaResult& r);
void from_json(const nlohmann::json& j, SigmaResult& r);
void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

}  // namespace vmm
