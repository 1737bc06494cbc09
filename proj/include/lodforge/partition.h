#pragma once

// Splits a point cloud into octree leaves of at most T points with a
// hierarchical counting sort: count into a dense grid, refine overfull cells
// with extended grids, merge small sibling groups bottom-up, turn the merged
// counters into nodes, then insert every point into its leaf.

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lodforge/model.h"

namespace lodforge {

/// Counter sentinels. Plain counters stay below kExtended.
inline constexpr std::uint32_t kUnmergeable = 0xFFFFFFFFu;
inline constexpr std::uint32_t kExtended = 0xFFFFFFFEu;
inline constexpr std::uint32_t kMaxCounter = 0xFFFFFFFDu;

/// Pyramid of counting grids. Level l is a dense (2^l)^3 grid (x fastest);
/// level 0 is the single cell `anchor` of the (2^baseDepth)^3 grid of the
/// whole octree. The main pyramid has baseDepth 0; an extended pyramid refines
/// one overfull finest cell of its parent pyramid.
struct CountPyramid {
  int baseDepth = 0;
  int height = 0;
  Vector3i anchor = Vector3i::Zero();
  std::int32_t parent = -1;
  std::vector<std::vector<std::uint32_t>> levels;
  /// Finest-level cell index -> id of the pyramid refining that cell.
  std::unordered_map<std::size_t, std::int32_t> extensions;

  static CountPyramid make(int baseDepth, int height, const Vector3i& anchor, std::int32_t parent);

  int finest_depth() const { return baseDepth + height; }
  static std::int64_t dim(int level) { return std::int64_t{1} << level; }
  static std::size_t index(int level, const Vector3i& local) {
    const auto d = dim(level);
    return static_cast<std::size_t>(local.x() + d * (local.y() + d * local.z()));
  }
  /// Cell of this pyramid at `level` holding the absolute cell `cell` of
  /// depth baseDepth + level.
  Vector3i local(int level, const Vector3i& cell) const { return cell - anchor * dim(level); }

  std::uint32_t& at(int level, const Vector3i& local) { return levels[level][index(level, local)]; }
  std::uint32_t at(int level, const Vector3i& local) const { return levels[level][index(level, local)]; }
};

/// All pyramids of one partition run; index 0 is the main pyramid and every
/// pyramid's parent has a smaller index.
struct CountingState {
  AABB bounds;
  std::vector<CountPyramid> pyramids;
};

struct PartitionStats {
  std::uint64_t countReads = 0;   // points projected by the counting pass
  std::uint64_t extendReads = 0;  // points projected by extension passes
  std::uint64_t insertReads = 0;  // points projected by the insertion pass
  int extensionRounds = 0;
  std::size_t extendedGrids = 0;
};

/// Counts points into the finest level (2^depth)^3 of a fresh main pyramid.
CountingState count(const std::vector<Point>& points, const AABB& bounds, int depth,
                    unsigned threads = 1, PartitionStats* stats = nullptr);

/// Replaces finest cells holding more than `threshold` points by extended
/// pyramids of up to `extensionDepth` levels and recounts their points,
/// repeating on the new grids until no cell is overfull or `maxDepth` is hit.
void extend_overfull_cells(CountingState& state, const std::vector<Point>& points,
                           std::uint32_t threshold, int extensionDepth, int maxDepth,
                           PartitionStats* stats = nullptr);

/// Bottom-up 2x2x2 merge of every pyramid, deepest extended pyramids first.
void merge(CountingState& state, std::uint32_t threshold);

enum class TargetKind : std::uint8_t { Empty = 0, Leaf = 1, Inner = 2, Extended = 3 };

struct Target {
  TargetKind kind = TargetKind::Empty;
  std::int32_t id = -1;  // node id, or pyramid id for Extended
};

/// Cell -> node map, shaped like the counting pyramids.
class TargetPyramid {
 public:
  explicit TargetPyramid(const CountingState& state);

  Target get(std::size_t pyramid, int level, std::size_t cell) const;
  void set(std::size_t pyramid, int level, std::size_t cell, Target t);

 private:
  // (kind << 30) | id
  std::vector<std::vector<std::vector<std::uint32_t>>> cells_;
};

struct Skeleton {
  Octree tree;                           // nodes without points
  std::vector<std::uint32_t> capacity;   // per node; 0 for inner nodes
  TargetPyramid targets;
};

/// Creates one leaf per positive counter and one inner node per unmergeable
/// counter, linked by path, in pre-order.
Skeleton build_targets(const CountingState& state, const BuildConfig& config);

/// Moves every point into its leaf, keeping input order inside each leaf.
void insert(const std::vector<Point>& points, const CountingState& state, Skeleton& skeleton,
            unsigned threads = 1, PartitionStats* stats = nullptr);

/// Full split: bounds, count, extend, merge, targets, insert.
Octree partition(const std::vector<Point>& points, const BuildConfig& config,
                 PartitionStats* stats = nullptr);

}  // namespace lodforge
