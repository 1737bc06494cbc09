#pragma once

#include <cstdint>
#include <vector>

#include "lodforge/ingest.h"
#include "lodforge/partition.h"
#include "lodforge/sampling.h"

namespace testing_support {

inline lodforge::Octree build(const std::vector<lodforge::Point>& points,
                              lodforge::BuildConfig config = {}) {
  lodforge::Octree tree = lodforge::partition(points, config);
  lodforge::build_lod(tree, config.strategy, config.seed, config.threads);
  return tree;
}

inline std::vector<lodforge::Point> preset(lodforge::Preset kind, std::uint64_t count,
                                           std::uint64_t seed = 1) {
  return lodforge::generate({kind, count, seed});
}

inline std::uint64_t leaf_points(const lodforge::Octree& tree) {
  std::uint64_t n = 0;
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) n += node.points.size();
  }
  return n;
}

}  // namespace testing_support
