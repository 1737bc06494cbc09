#include "lodforge/model.h"

#include <algorithm>
#include <cmath>

namespace lodforge {

AABB cubic_bounds(const std::vector<Point>& points) {
  if (points.empty()) return AABB{};
  Vector3d lo = points.front().position;
  Vector3d hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  double size = (hi - lo).maxCoeff();
  if (!(size > 0.0)) size = 1.0;
  return AABB{lo, size};
}

AABB child_bounds(const AABB& parent, int octant) {
  if (octant < 0 || octant > 7) throw std::out_of_range("octant must be in [0,7]");
  const double half = parent.size * 0.5;
  Vector3d min = parent.min;
  if (octant & 1) min.x() += half;
  if (octant & 2) min.y() += half;
  if (octant & 4) min.z() += half;
  return AABB{min, half};
}

Vector3d normalized_position(const Vector3d& p, const AABB& bounds) {
  Vector3d u;
  for (int i = 0; i < 3; ++i) {
    u[i] = (p[i] - bounds.min[i]) / bounds.size;
    if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
      throw InvariantError("point lies outside the node bounds");
    }
  }
  return u;
}

Vector3i grid_cell(const Vector3d& u, std::int64_t gridDim) {
  if (gridDim < 1) throw std::invalid_argument("gridDim must be >= 1");
  // Callers use power-of-two grids, so the product is exact and cells at
  // different resolutions nest by plain bit shifts.
  const double scale = static_cast<double>(gridDim);
  Vector3i cell;
  for (int i = 0; i < 3; ++i) {
    const auto c = static_cast<std::int64_t>(std::floor(u[i] * scale));
    cell[i] = std::clamp<std::int64_t>(c, 0, gridDim - 1);
  }
  return cell;
}

Vector3i cell_of(const Vector3d& p, const AABB& bounds, std::int64_t gridDim) {
  if (gridDim < 1) throw std::invalid_argument("gridDim must be >= 1");
  return grid_cell(normalized_position(p, bounds), gridDim);
}

Vector3i cell_of(const Point& p, const AABB& bounds, std::int64_t gridDim) {
  return cell_of(p.position, bounds, gridDim);
}

NodePath NodePath::child(int octant) const {
  if (octant < 0 || octant > 7) throw std::out_of_range("octant must be in [0,7]");
  if (length_ >= kMaxPathLength) throw std::length_error("node path exceeds maximum depth");
  NodePath out = *this;
  out.digits_[out.length_++] = static_cast<std::uint8_t>(octant);
  return out;
}

NodePath NodePath::parent() const {
  if (length_ == 0) throw std::logic_error("root has no parent");
  NodePath out = *this;
  out.digits_[--out.length_] = 0;
  return out;
}

Vector3i NodePath::cell() const {
  Vector3i c = Vector3i::Zero();
  for (int level = 0; level < length_; ++level) {
    const int o = digits_[level];
    c = 2 * c;
    c.x() += o & 1;
    c.y() += (o >> 1) & 1;
    c.z() += (o >> 2) & 1;
  }
  return c;
}

std::string NodePath::to_string() const {
  std::string s;
  s.reserve(length_);
  for (int i = 0; i < length_; ++i) s.push_back(static_cast<char>('0' + digits_[i]));
  return s;
}

NodePath NodePath::from_string(const std::string& digits) {
  NodePath p;
  for (char c : digits) {
    if (c < '0' || c > '7') throw std::invalid_argument("node path digits must be 0..7");
    p = p.child(c - '0');
  }
  return p;
}

std::strong_ordering operator<=>(const NodePath& a, const NodePath& b) {
  return std::lexicographical_compare_three_way(a.digits_.begin(), a.digits_.begin() + a.length_,
                                                b.digits_.begin(), b.digits_.begin() + b.length_);
}

AABB bounds_of(const AABB& root, const NodePath& path) {
  AABB b = root;
  for (int level = 0; level < path.depth(); ++level) b = child_bounds(b, path[level]);
  return b;
}

int OctreeNode::child_count() const {
  return static_cast<int>(std::count_if(children.begin(), children.end(),
                                        [](std::int32_t c) { return c != kNoChild; }));
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::FirstCome: return "first-come";
    case Strategy::Random: return "random";
    case Strategy::Average: return "average";
    case Strategy::Weighted: return "weighted";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "first-come") return Strategy::FirstCome;
  if (name == "random") return Strategy::Random;
  if (name == "average") return Strategy::Average;
  if (name == "weighted") return Strategy::Weighted;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::size_t Octree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const OctreeNode& n) { return n.is_leaf(); }));
}

int Octree::max_depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.path.depth());
  return d;
}

}  // namespace lodforge
