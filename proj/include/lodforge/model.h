#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lodforge {

using Vector3d = Eigen::Vector3d;
using Vector3i = Eigen::Matrix<std::int64_t, 3, 1>;

/// Thrown when input bytes do not follow a supported file layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a file cannot be opened, read or written, or is truncated.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an internal invariant of the construction pipeline breaks.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ColorRGB {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const ColorRGB&, const ColorRGB&) = default;
};

inline constexpr ColorRGB kGray{128, 128, 128};

struct Point {
  Vector3d position = Vector3d::Zero();
  ColorRGB color;

  friend bool operator==(const Point& a, const Point& b) {
    return a.position == b.position && a.color == b.color;
  }
};

/// Axis-aligned cube: [min, min + size] on every axis.
struct AABB {
  Vector3d min = Vector3d::Zero();
  double size = 1.0;

  Vector3d max() const { return min.array() + size; }
  Vector3d center() const { return min.array() + 0.5 * size; }

  friend bool operator==(const AABB& a, const AABB& b) {
    return a.min == b.min && a.size == b.size;
  }
};

/// Cube enclosing all points: min corner = component-wise minimum, side =
/// largest axis extent (1.0 when every extent is zero).
AABB cubic_bounds(const std::vector<Point>& points);

/// Octant bits: bit 0 -> x, bit 1 -> y, bit 2 -> z.
AABB child_bounds(const AABB& parent, int octant);

/// Grid cell of `p` in a gridDim^3 subdivision of `bounds`. Points on the max
/// face clamp into the last cell; points outside the cube throw.
Vector3i cell_of(const Point& p, const AABB& bounds, std::int64_t gridDim);
Vector3i cell_of(const Vector3d& p, const AABB& bounds, std::int64_t gridDim);

/// Position relative to `bounds`, scaled to [0,1]^3. Throws outside the cube.
Vector3d normalized_position(const Vector3d& p, const AABB& bounds);

/// floor(u * gridDim) clamped to [0, gridDim-1] per axis.
Vector3i grid_cell(const Vector3d& u, std::int64_t gridDim);

inline constexpr int kMaxPathLength = 16;

/// Octree address: one octant digit per level below the root.
class NodePath {
 public:
  NodePath() = default;

  int depth() const { return length_; }
  bool is_root() const { return length_ == 0; }
  int operator[](int level) const { return digits_[level]; }

  NodePath child(int octant) const;
  NodePath parent() const;
  int last_octant() const { return digits_[length_ - 1]; }

  /// Cell coordinates of this node in the (2^depth)^3 grid of the root.
  Vector3i cell() const;

  /// Digits as characters '0'..'7'; root is the empty string.
  std::string to_string() const;
  static NodePath from_string(const std::string& digits);

  friend bool operator==(const NodePath& a, const NodePath& b) {
    return a.length_ == b.length_ &&
           std::equal(a.digits_.begin(), a.digits_.begin() + a.length_, b.digits_.begin());
  }
  /// Lexicographic, a prefix orders before its extensions.
  friend std::strong_ordering operator<=>(const NodePath& a, const NodePath& b);

 private:
  std::array<std::uint8_t, kMaxPathLength> digits_{};
  int length_ = 0;
};

/// Bounds of the node at `path` below `root`, by repeated child_bounds.
AABB bounds_of(const AABB& root, const NodePath& path);

inline constexpr int kSamplingGrid = 128;

struct Voxel {
  std::uint8_t cx = 0;
  std::uint8_t cy = 0;
  std::uint8_t cz = 0;
  ColorRGB color;

  friend bool operator==(const Voxel&, const Voxel&) = default;
};

/// Octant of the node's 128^3 grid that holds the voxel (bit i set when the
/// i-th coordinate is in the upper half).
inline int voxel_octant(const Voxel& v) {
  return (v.cx >= 64 ? 1 : 0) | (v.cy >= 64 ? 2 : 0) | (v.cz >= 64 ? 4 : 0);
}

enum class NodeKind : std::uint8_t { Leaf = 0, Inner = 1 };

inline constexpr std::int32_t kNoChild = -1;

struct OctreeNode {
  NodePath path;
  AABB bounds;
  NodeKind kind = NodeKind::Leaf;
  std::vector<Point> points;  // Leaf only
  std::vector<Voxel> voxels;  // Inner only
  std::array<std::int32_t, 8> children{kNoChild, kNoChild, kNoChild, kNoChild,
                                       kNoChild, kNoChild, kNoChild, kNoChild};
  bool oversized = false;

  bool is_leaf() const { return kind == NodeKind::Leaf; }
  std::size_t sample_count() const { return is_leaf() ? points.size() : voxels.size(); }
  int child_count() const;
};

enum class Strategy : std::uint8_t { FirstCome = 0, Random = 1, Average = 2, Weighted = 3 };

std::string to_string(Strategy s);
/// Accepts "first-come", "random", "average", "weighted".
Strategy strategy_from_string(const std::string& name);

struct BuildConfig {
  std::uint32_t threshold = 50'000;  // max points per leaf
  int initialDepth = 8;
  int extensionDepth = 4;
  int maxDepth = kMaxPathLength;
  int gridSize = kSamplingGrid;
  Strategy strategy = Strategy::FirstCome;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Nodes are stored in pre-order (path order); index 0 is the root.
struct Octree {
  std::vector<OctreeNode> nodes;
  AABB worldBounds;
  BuildConfig config;
  std::uint64_t pointCount = 0;

  const OctreeNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const;
  int max_depth() const;
};

}  // namespace lodforge
