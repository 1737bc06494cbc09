#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "lodforge/model.h"

namespace lodforge {

struct Camera {
  Vector3d eye = Vector3d(0, 0, 5);
  Vector3d lookAt = Vector3d::Zero();
  Vector3d up = Vector3d::UnitZ();
  double fovY = 60.0;  // degrees
  int viewportW = 1920;
  int viewportH = 1080;
  double nearPlane = 0.01;
  double farPlane = 1.0e6;

  /// Throws std::invalid_argument when the camera is unusable.
  void validate() const;
};

/// Six inward-facing planes (n.x + d >= 0 inside): left, right, bottom, top,
/// near, far.
struct Frustum {
  std::array<Eigen::Vector4d, 6> planes;
};

Frustum make_frustum(const Camera& camera);

/// Conservative box test: never rejects a box that intersects the frustum.
bool frustum_intersects(const AABB& bounds, const Frustum& frustum, const Camera& camera);
bool frustum_intersects(const AABB& bounds, const Camera& camera);

/// On-screen extent of the node's bounding sphere in pixels; +inf when the
/// eye is inside the sphere.
double projected_size(const AABB& bounds, const Camera& camera);

struct SelectedNode {
  NodePath path;
  NodeKind kind = NodeKind::Leaf;
  std::uint64_t totalSamples = 0;
  std::uint64_t drawnSamples = 0;
  std::uint8_t discardedOctants = 0;  // bit o: octant o is replaced by a selected child
  std::size_t node = 0;               // index into Octree::nodes
};

struct SelectionResult {
  std::vector<SelectedNode> items;  // pre-order
  std::uint64_t culledNodes = 0;
  double threshold = 100.0;

  std::uint64_t points_drawn() const;
  std::uint64_t voxels_drawn() const;
};

inline constexpr double kDefaultThresholdPx = 100.0;

/// Replacing-LOD selection: a visible node is drawn, and expanded into its
/// visible children while its projected size exceeds the threshold. Voxels in
/// octants covered by a selected child are discarded.
SelectionResult select(const Octree& tree, const Camera& camera,
                       double thresholdPx = kDefaultThresholdPx);

}  // namespace lodforge
