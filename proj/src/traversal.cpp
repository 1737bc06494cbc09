#include "lodforge/traversal.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lodforge {

void Camera::validate() const {
  if (!eye.allFinite() || !lookAt.allFinite() || !up.allFinite()) {
    throw std::invalid_argument("camera vectors must be finite");
  }
  if ((lookAt - eye).norm() == 0.0) throw std::invalid_argument("eye and look-at coincide");
  if ((lookAt - eye).cross(up).norm() == 0.0) {
    throw std::invalid_argument("up vector is parallel to the view direction");
  }
  if (!(fovY > 0.0 && fovY < 180.0)) throw std::invalid_argument("fovY must be in (0, 180)");
  if (viewportW <= 0 || viewportH <= 0) throw std::invalid_argument("viewport must be positive");
  if (!(nearPlane > 0.0)) throw std::invalid_argument("near plane must be > 0");
  if (!(farPlane > nearPlane)) throw std::invalid_argument("far plane must exceed near plane");
}

Frustum make_frustum(const Camera& camera) {
  camera.validate();
  const Vector3d forward = (camera.lookAt - camera.eye).normalized();
  const Vector3d right = forward.cross(camera.up).normalized();
  const Vector3d up = right.cross(forward);

  const double tanY = std::tan(camera.fovY * std::numbers::pi / 360.0);
  const double tanX = tanY * camera.viewportW / camera.viewportH;

  const auto plane = [&](const Vector3d& normal, const Vector3d& through) {
    const Vector3d n = normal.normalized();
    Eigen::Vector4d p;
    p << n, -n.dot(through);
    return p;
  };

  Frustum f;
  // Side planes pass through the eye; normals point into the view volume.
  f.planes[0] = plane(right + tanX * forward, camera.eye);   // left
  f.planes[1] = plane(-right + tanX * forward, camera.eye);  // right
  f.planes[2] = plane(up + tanY * forward, camera.eye);      // bottom
  f.planes[3] = plane(-up + tanY * forward, camera.eye);     // top
  f.planes[4] = plane(forward, camera.eye + camera.nearPlane * forward);
  f.planes[5] = plane(-forward, camera.eye + camera.farPlane * forward);
  return f;
}

bool frustum_intersects(const AABB& bounds, const Frustum& frustum, const Camera& camera) {
  const Vector3d lo = bounds.min;
  const Vector3d hi = bounds.max();
  if ((camera.eye.array() >= lo.array()).all() && (camera.eye.array() <= hi.array()).all()) {
    return true;
  }
  for (const auto& p : frustum.planes) {
    // Corner farthest along the plane normal.
    Vector3d v;
    for (int i = 0; i < 3; ++i) v[i] = p[i] >= 0.0 ? hi[i] : lo[i];
    if (p.head<3>().dot(v) + p[3] < 0.0) return false;
  }
  return true;
}

bool frustum_intersects(const AABB& bounds, const Camera& camera) {
  return frustum_intersects(bounds, make_frustum(camera), camera);
}

double projected_size(const AABB& bounds, const Camera& camera) {
  const double diameter = std::sqrt(3.0) * bounds.size;
  const double d = (bounds.center() - camera.eye).norm();
  if (d <= 0.5 * diameter) return std::numeric_limits<double>::infinity();
  const double slope = std::tan(camera.fovY * std::numbers::pi / 360.0);
  return camera.viewportH * diameter / (2.0 * d * slope);
}

std::uint64_t SelectionResult::points_drawn() const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.kind == NodeKind::Leaf) n += item.drawnSamples;
  }
  return n;
}

std::uint64_t SelectionResult::voxels_drawn() const {
  std::uint64_t n = 0;
  for (const auto& item : items) {
    if (item.kind == NodeKind::Inner) n += item.drawnSamples;
  }
  return n;
}

namespace {

class Selector {
 public:
  Selector(const Octree& tree, const Camera& camera, double threshold)
      : tree_(tree), camera_(camera), frustum_(make_frustum(camera)), threshold_(threshold) {
    result_.threshold = threshold;
  }

  SelectionResult run() {
    if (!tree_.nodes.empty()) visit(0);
    return std::move(result_);
  }

 private:
  bool visible(std::size_t node) const {
    return frustum_intersects(tree_.nodes[node].bounds, frustum_, camera_);
  }

  void visit(std::size_t index) {
    if (!visible(index)) {
      ++result_.culledNodes;
      return;
    }
    const OctreeNode& node = tree_.nodes[index];
    const std::size_t slot = result_.items.size();
    result_.items.push_back(SelectedNode{node.path, node.kind, node.sample_count(),
                                         node.sample_count(), 0, index});
    if (node.is_leaf() || !(projected_size(node.bounds, camera_) > threshold_)) return;

    std::uint8_t mask = 0;
    for (int o = 0; o < 8; ++o) {
      const std::int32_t child = node.children[o];
      if (child == kNoChild) continue;
      const std::size_t before = result_.items.size();
      visit(static_cast<std::size_t>(child));
      if (result_.items.size() > before) mask |= static_cast<std::uint8_t>(1u << o);
    }
    std::uint64_t drawn = 0;
    for (const Voxel& v : node.voxels) {
      if (!(mask & (1u << voxel_octant(v)))) ++drawn;
    }
    result_.items[slot].discardedOctants = mask;
    result_.items[slot].drawnSamples = drawn;
  }

  const Octree& tree_;
  const Camera& camera_;
  Frustum frustum_;
  double threshold_;
  SelectionResult result_;
};

}  // namespace

SelectionResult select(const Octree& tree, const Camera& camera, double thresholdPx) {
  return Selector(tree, camera, thresholdPx).run();
}

}  // namespace lodforge
