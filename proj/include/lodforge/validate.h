#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lodforge/model.h"

namespace lodforge {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::uint64_t violations = 0;
  std::string detail;  // first violation, if any
};

/// Structural and content invariants of a built octree:
///   structure, path-order, conservation, capacity, oversized-depth,
///   maximality, containment, voxel-bounds, voxel-uniqueness,
///   inner-nonempty, voxel-count.
std::vector<CheckResult> check_invariants(const Octree& tree);

inline bool all_passed(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

}  // namespace lodforge
