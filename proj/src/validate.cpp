#include "lodforge/validate.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "lodforge/sampling.h"

namespace lodforge {
namespace {

class Check {
 public:
  explicit Check(std::string name) { result_.name = std::move(name); }

  void fail(const std::string& what) {
    if (result_.violations++ == 0) result_.detail = what;
    result_.passed = false;
  }

  CheckResult done() { return std::move(result_); }

 private:
  CheckResult result_;
};

std::string where(const OctreeNode& n) {
  return "node '" + n.path.to_string() + "'";
}

}  // namespace

std::vector<CheckResult> check_invariants(const Octree& tree) {
  const auto& nodes = tree.nodes;
  Check structure("structure"), order("path-order"), conservation("conservation"),
      capacity("capacity"), oversizedDepth("oversized-depth"), maximality("maximality"),
      containment("containment"), voxelBounds("voxel-bounds"), uniqueness("voxel-uniqueness"),
      nonEmpty("inner-nonempty"), voxelCount("voxel-count");

  if (nodes.empty() || !nodes.front().path.is_root()) structure.fail("missing root node");

  const int deepest = tree.max_depth();
  std::uint64_t leafPoints = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const OctreeNode& n = nodes[i];
    if (i > 0 && !(nodes[i - 1].path < n.path)) order.fail(where(n) + " out of path order");
    if (!(n.bounds == bounds_of(tree.worldBounds, n.path))) structure.fail(where(n) + " has wrong bounds");

    std::uint64_t childSamples = 0;
    bool allLeafChildren = true;
    std::uint64_t childPoints = 0;
    for (int o = 0; o < 8; ++o) {
      const std::int32_t c = n.children[o];
      if (c == kNoChild) continue;
      if (c <= static_cast<std::int32_t>(i) || c >= static_cast<std::int32_t>(nodes.size())) {
        structure.fail(where(n) + " has an invalid child index");
        continue;
      }
      const OctreeNode& child = nodes[static_cast<std::size_t>(c)];
      if (!(child.path == n.path.child(o))) structure.fail(where(child) + " is linked to the wrong parent");
      childSamples += child.sample_count();
      allLeafChildren = allLeafChildren && child.is_leaf();
      if (child.is_leaf()) childPoints += child.points.size();
    }

    if (n.is_leaf()) {
      if (n.child_count() != 0) structure.fail(where(n) + " is a leaf with children");
      if (!n.voxels.empty()) structure.fail(where(n) + " is a leaf with voxels");
      leafPoints += n.points.size();
      if (!n.oversized && n.points.size() > tree.config.threshold) {
        capacity.fail(where(n) + " holds " + std::to_string(n.points.size()) + " points");
      }
      if (n.oversized && n.points.size() <= tree.config.threshold) {
        capacity.fail(where(n) + " is flagged oversized but within capacity");
      }
      if (n.oversized && n.path.depth() != deepest) {
        oversizedDepth.fail(where(n) + " is oversized above the deepest level");
      }
      // Leaf points are stored as 32-bit float offsets from the node corner.
      const double tol = 1e-6 * n.bounds.size + 1e-12 * n.bounds.min.cwiseAbs().maxCoeff();
      for (const Point& p : n.points) {
        const bool inside = ((p.position - n.bounds.min).array() >= -tol).all() &&
                            ((n.bounds.max() - p.position).array() >= -tol).all();
        if (!inside) {
          containment.fail(where(n) + " holds a point outside its bounds");
          break;
        }
      }
      continue;
    }

    if (!n.points.empty()) structure.fail(where(n) + " is an inner node with points");
    if (n.child_count() == 0) structure.fail(where(n) + " is an inner node without children");
    if (n.oversized) structure.fail(where(n) + " is an inner node flagged oversized");
    if (allLeafChildren && n.child_count() > 0 && childPoints < tree.config.threshold) {
      maximality.fail(where(n) + " could have been merged (" + std::to_string(childPoints) + " points)");
    }
    if (n.voxels.empty()) nonEmpty.fail(where(n) + " has no voxels");
    if (n.voxels.size() > std::min<std::uint64_t>(childSamples, SamplingGrid::kCells)) {
      voxelCount.fail(where(n) + " has more voxels than child samples");
    }

    std::vector<std::tuple<int, int, int>> coords;
    coords.reserve(n.voxels.size());
    for (const Voxel& v : n.voxels) {
      if (v.cx >= kSamplingGrid || v.cy >= kSamplingGrid || v.cz >= kSamplingGrid) {
        voxelBounds.fail(where(n) + " has a voxel coordinate outside [0,128)");
      }
      coords.emplace_back(v.cx, v.cy, v.cz);
    }
    std::sort(coords.begin(), coords.end());
    if (std::adjacent_find(coords.begin(), coords.end()) != coords.end()) {
      uniqueness.fail(where(n) + " has duplicate voxel coordinates");
    }
  }

  if (leafPoints != tree.pointCount) {
    conservation.fail("leaves hold " + std::to_string(leafPoints) + " points, expected " +
                      std::to_string(tree.pointCount));
  }

  return {structure.done(), order.done(), conservation.done(), capacity.done(),
          oversizedDepth.done(), maximality.done(), containment.done(), voxelBounds.done(),
          uniqueness.done(), nonEmpty.done(), voxelCount.done()};
}

}  // namespace lodforge
