#pragma once

// Bottom-up voxelization of inner nodes. Every inner node projects the points
// or voxels of its children into a 128^3 sampling grid and keeps one voxel per
// occupied cell; the strategies differ only in how that voxel's color is
// chosen.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lodforge/model.h"

namespace lodforge {

/// A child point or voxel in the parent's sampling-grid coordinates.
struct SampleView {
  Vector3d gpos = Vector3d::Zero();  // [0,128)^3
  ColorRGB color;
  std::uint32_t ordinal = 0;  // octant-major, stored-order-minor
};

struct AccumCell {
  std::uint64_t rSum = 0;
  std::uint64_t gSum = 0;
  std::uint64_t bSum = 0;
  std::uint64_t count = 0;
};

struct WeightedCell {
  double rSum = 0.0;
  double gSum = 0.0;
  double bSum = 0.0;
  double wSum = 0.0;
  bool occupied = false;
};

/// Raised when a node holds more samples than the 20-bit index of the random
/// strategy can address.
class SampleIndexOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

inline constexpr std::uint32_t kMaxRandomSamples = 1u << 20;

/// Dense 128^3 cell -> slot map. Slots are handed out in order of first touch
/// and clear() resets only the touched cells, so one grid can be reused for
/// every node a worker processes.
class SamplingGrid {
 public:
  static constexpr std::size_t kCells = std::size_t{kSamplingGrid} * kSamplingGrid * kSamplingGrid;

  SamplingGrid();

  /// Slot of `cell`, allocating the next one on first touch.
  std::uint32_t slot(std::size_t cell, bool& created);
  std::size_t slot_count() const { return cells_.size(); }
  std::size_t cell_of_slot(std::uint32_t slot) const { return cells_[slot]; }
  void clear();

 private:
  std::vector<std::uint32_t> slots_;  // 0 = untouched, else slot + 1
  std::vector<std::uint32_t> cells_;
};

inline std::size_t grid_index(int x, int y, int z) {
  return static_cast<std::size_t>(x) +
         kSamplingGrid * (static_cast<std::size_t>(y) + kSamplingGrid * static_cast<std::size_t>(z));
}

/// Integer cell holding a sampling-grid position.
std::size_t sample_cell(const Vector3d& gpos);

Voxel voxel_at(std::size_t cell, ColorRGB color);

/// Position of a leaf point of `tree` in the sampling grid of the inner node
/// at `path`, clamped into [0, 128).
Vector3d point_grid_position(const Point& p, const AABB& world, const NodePath& path);

/// Samples of all children of inner node `node`, in ordinal order.
std::vector<SampleView> project_child_samples(const Octree& tree, std::size_t node);

/// Per-node random stream key: fold of splitmix64 over the octant digits.
std::uint64_t path_hash(const NodePath& path, std::uint64_t seed);

/// Top 12 random bits over the low 20 bits of the sample index.
constexpr std::uint32_t random_key(std::uint32_t rand32, std::uint32_t ordinal) {
  return (rand32 & 0xfff00000u) | (ordinal & 0x000fffffu);
}

/// Rounds half away from zero and clamps to [0, 255].
std::uint8_t round_channel(double v);

/// clamp(1 - |gpos - cellCenter|, 0, 1) with Euclidean distance.
double neighbor_weight(const Vector3d& gpos, int x, int y, int z);

// Voxels come out in order of first occupation, i.e. ascending ordinal of
// the first sample that landed in each cell.
std::vector<Voxel> sample_first_come(std::span<const SampleView> samples, SamplingGrid& grid);
std::vector<Voxel> sample_random(std::span<const SampleView> samples, std::uint64_t nodeKey,
                                 SamplingGrid& grid);
std::vector<Voxel> sample_average(std::span<const SampleView> samples, SamplingGrid& grid);
std::vector<Voxel> sample_weighted(std::span<const SampleView> samples, SamplingGrid& grid);

/// Voxels for inner node `node` under `strategy`.
std::vector<Voxel> sample_node(const Octree& tree, std::size_t node, Strategy strategy,
                               std::uint64_t seed, SamplingGrid& grid);

/// Populates every inner node, deepest first. Nodes of equal depth are
/// processed concurrently on `threads` workers, each with its own grid.
void build_lod(Octree& tree, Strategy strategy, std::uint64_t seed, unsigned threads = 1);

}  // namespace lodforge
