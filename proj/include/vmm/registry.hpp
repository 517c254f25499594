#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vmm/functionals.hpp"
#include "vmm/sweepout.hpp"

namespace vmm {

/// A problem instance addressed by a string key such as "torus_loop:R=2,r=0.5,N=64".
struct Problem {
  std::string key{};  ///< canonical: every parameter spelled out in declaration order
  std::string name{};
  std::map<std::string, std::string> params{};
  ViscousFamily family;
  Sweepout seed;
  double norm_bound = 1e3;
  std::optional<SurfaceChart> chart{};  ///< loop problems only
  int nodes = 0;
};

/// Registered problem names.
std::vector<std::string> problem_names();

/// Parameters of a problem with their defaults, in declaration order.
std::vector<std::pair<std::string, std::string>> problem_parameters(const std::string& name);

/// Build a problem. `frames` is the seed sweepout size. Unknown names or parameters throw
/// DomainError listing the valid ones.
Problem make_problem(const std::string& key, int frames = 33);

/// Canonical form of a key without building the problem.
std::string canonical_problem_key(const std::string& key);

}  // namespace vmm
