#include "lodforge/sampling.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "lodforge/parallel.h"
#include "lodforge/splitmix.h"

namespace lodforge {

SamplingGrid::SamplingGrid() : slots_(kCells, 0u) {}

std::uint32_t SamplingGrid::slot(std::size_t cell, bool& created) {
  std::uint32_t& s = slots_[cell];
  created = s == 0;
  if (created) {
    cells_.push_back(static_cast<std::uint32_t>(cell));
    s = static_cast<std::uint32_t>(cells_.size());
  }
  return s - 1;
}

void SamplingGrid::clear() {
  for (std::uint32_t c : cells_) slots_[c] = 0;
  cells_.clear();
}

std::size_t sample_cell(const Vector3d& gpos) {
  const auto axis = [](double v) {
    return std::clamp(static_cast<int>(std::floor(v)), 0, kSamplingGrid - 1);
  };
  return grid_index(axis(gpos.x()), axis(gpos.y()), axis(gpos.z()));
}

Voxel voxel_at(std::size_t cell, ColorRGB color) {
  const std::size_t n = kSamplingGrid;
  return Voxel{static_cast<std::uint8_t>(cell % n), static_cast<std::uint8_t>((cell / n) % n),
               static_cast<std::uint8_t>(cell / (n * n)), color};
}

Vector3d point_grid_position(const Point& p, const AABB& world, const NodePath& path) {
  // Same value as (p - node.min) / node.size * 128, but derived from the
  // world-normalized coordinate: scaling by a power of two and subtracting the
  // node's cell offset are exact, so the resulting cell always agrees with the
  // octant the partition assigned the point to.
  const double scale = std::ldexp(1.0, path.depth() + 7);
  const Vector3i cell = path.cell();
  constexpr double kTop = 0x1.fffffffffffffp+6;  // largest double below 128
  Vector3d g;
  for (int i = 0; i < 3; ++i) {
    const double u = (p.position[i] - world.min[i]) / world.size;
    const double v = u * scale - static_cast<double>(cell[i]) * kSamplingGrid;
    g[i] = std::clamp(v, 0.0, kTop);
  }
  return g;
}

std::vector<SampleView> project_child_samples(const Octree& tree, std::size_t node) {
  const OctreeNode& parent = tree.nodes.at(node);
  if (parent.is_leaf()) throw std::invalid_argument("only inner nodes have child samples");

  std::size_t total = 0;
  for (std::int32_t c : parent.children) {
    if (c != kNoChild) total += tree.nodes[static_cast<std::size_t>(c)].sample_count();
  }
  std::vector<SampleView> out;
  out.reserve(total);

  std::uint32_t ordinal = 0;
  for (int o = 0; o < 8; ++o) {
    const std::int32_t c = parent.children[o];
    if (c == kNoChild) continue;
    const OctreeNode& child = tree.nodes[static_cast<std::size_t>(c)];
    if (child.sample_count() == 0) {
      throw InvariantError("child " + child.path.to_string() + " has no samples");
    }
    if (child.is_leaf()) {
      for (const Point& p : child.points) {
        out.push_back({point_grid_position(p, tree.worldBounds, parent.path), p.color, ordinal++});
      }
    } else {
      const Vector3d offset(64.0 * (o & 1), 64.0 * ((o >> 1) & 1), 64.0 * ((o >> 2) & 1));
      for (const Voxel& v : child.voxels) {
        const Vector3d c(v.cx, v.cy, v.cz);
        out.push_back({offset + (c.array() + 0.5).matrix() / 2.0, v.color, ordinal++});
      }
    }
  }
  return out;
}

std::uint64_t path_hash(const NodePath& path, std::uint64_t seed) {
  std::uint64_t key = seed;
  for (int level = 0; level < path.depth(); ++level) {
    key = splitmix64(key * 8 + static_cast<std::uint64_t>(path[level]) + 1);
  }
  return key;
}

std::uint8_t round_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

double neighbor_weight(const Vector3d& gpos, int x, int y, int z) {
  const Vector3d center(x + 0.5, y + 0.5, z + 0.5);
  return std::clamp(1.0 - (gpos - center).norm(), 0.0, 1.0);
}

namespace {

std::uint8_t mean_channel(std::uint64_t sum, std::uint64_t count) {
  return static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
}

}  // namespace

std::vector<Voxel> sample_first_come(std::span<const SampleView> samples, SamplingGrid& grid) {
  grid.clear();
  std::vector<const SampleView*> winner;
  for (const SampleView& s : samples) {
    bool created = false;
    const std::uint32_t slot = grid.slot(sample_cell(s.gpos), created);
    if (created) {
      winner.push_back(&s);
    } else if (s.ordinal < winner[slot]->ordinal) {
      winner[slot] = &s;
    }
  }
  std::vector<Voxel> out;
  out.reserve(winner.size());
  for (std::uint32_t slot = 0; slot < winner.size(); ++slot) {
    out.push_back(voxel_at(grid.cell_of_slot(slot), winner[slot]->color));
  }
  grid.clear();
  return out;
}

std::vector<Voxel> sample_random(std::span<const SampleView> samples, std::uint64_t nodeKey,
                                 SamplingGrid& grid) {
  if (samples.size() >= kMaxRandomSamples) {
    throw SampleIndexOverflow("random sampling supports fewer than 2^20 samples per node, got " +
                              std::to_string(samples.size()));
  }
  grid.clear();
  std::vector<std::uint32_t> best;
  std::vector<const SampleView*> winner;
  for (const SampleView& s : samples) {
    const auto rand32 = static_cast<std::uint32_t>(splitmix64(nodeKey ^ s.ordinal) >> 32);
    const std::uint32_t key = random_key(rand32, s.ordinal);
    bool created = false;
    const std::uint32_t slot = grid.slot(sample_cell(s.gpos), created);
    if (created) {
      best.push_back(key);
      winner.push_back(&s);
    } else if (key > best[slot]) {
      best[slot] = key;
      winner[slot] = &s;
    }
  }
  std::vector<Voxel> out;
  out.reserve(winner.size());
  for (std::uint32_t slot = 0; slot < winner.size(); ++slot) {
    out.push_back(voxel_at(grid.cell_of_slot(slot), winner[slot]->color));
  }
  grid.clear();
  return out;
}

std::vector<Voxel> sample_average(std::span<const SampleView> samples, SamplingGrid& grid) {
  grid.clear();
  std::vector<AccumCell> acc;
  for (const SampleView& s : samples) {
    bool created = false;
    const std::uint32_t slot = grid.slot(sample_cell(s.gpos), created);
    if (created) acc.emplace_back();
    AccumCell& a = acc[slot];
    a.rSum += s.color.r;
    a.gSum += s.color.g;
    a.bSum += s.color.b;
    ++a.count;
  }
  std::vector<Voxel> out;
  out.reserve(acc.size());
  for (std::uint32_t slot = 0; slot < acc.size(); ++slot) {
    const AccumCell& a = acc[slot];
    out.push_back(voxel_at(grid.cell_of_slot(slot),
                           ColorRGB{mean_channel(a.rSum, a.count), mean_channel(a.gSum, a.count),
                                    mean_channel(a.bSum, a.count)}));
  }
  grid.clear();
  return out;
}

std::vector<Voxel> sample_weighted(std::span<const SampleView> samples, SamplingGrid& grid) {
  grid.clear();
  std::vector<WeightedCell> acc;
  std::vector<std::uint32_t> occupiedOrder;
  for (const SampleView& s : samples) {
    const int bx = static_cast<int>(std::floor(s.gpos.x() - 0.5));
    const int by = static_cast<int>(std::floor(s.gpos.y() - 0.5));
    const int bz = static_cast<int>(std::floor(s.gpos.z() - 0.5));
    for (int z = bz; z <= bz + 1; ++z) {
      if (z < 0 || z >= kSamplingGrid) continue;
      for (int y = by; y <= by + 1; ++y) {
        if (y < 0 || y >= kSamplingGrid) continue;
        for (int x = bx; x <= bx + 1; ++x) {
          if (x < 0 || x >= kSamplingGrid) continue;
          const double w = neighbor_weight(s.gpos, x, y, z);
          if (w <= 0.0) continue;
          bool created = false;
          const std::uint32_t slot = grid.slot(grid_index(x, y, z), created);
          if (created) acc.emplace_back();
          WeightedCell& c = acc[slot];
          c.rSum += w * s.color.r;
          c.gSum += w * s.color.g;
          c.bSum += w * s.color.b;
          c.wSum += w;
        }
      }
    }
    // The containing cell is always within distance sqrt(3)/2 of the sample,
    // so it has received a positive weight above.
    bool created = false;
    const std::uint32_t own = grid.slot(sample_cell(s.gpos), created);
    if (created) throw InvariantError("weighted sample missed its own cell");
    if (!acc[own].occupied) {
      acc[own].occupied = true;
      occupiedOrder.push_back(own);
    }
  }
  std::vector<Voxel> out;
  out.reserve(occupiedOrder.size());
  for (std::uint32_t slot : occupiedOrder) {
    const WeightedCell& c = acc[slot];
    out.push_back(voxel_at(grid.cell_of_slot(slot),
                           ColorRGB{round_channel(c.rSum / c.wSum), round_channel(c.gSum / c.wSum),
                                    round_channel(c.bSum / c.wSum)}));
  }
  grid.clear();
  return out;
}

std::vector<Voxel> sample_node(const Octree& tree, std::size_t node, Strategy strategy,
                               std::uint64_t seed, SamplingGrid& grid) {
  const std::vector<SampleView> samples = project_child_samples(tree, node);
  switch (strategy) {
    case Strategy::FirstCome: return sample_first_come(samples, grid);
    case Strategy::Random:
      return sample_random(samples, path_hash(tree.nodes[node].path, seed), grid);
    case Strategy::Average: return sample_average(samples, grid);
    case Strategy::Weighted: return sample_weighted(samples, grid);
  }
  throw std::invalid_argument("unknown sampling strategy");
}

void build_lod(Octree& tree, Strategy strategy, std::uint64_t seed, unsigned threads) {
  std::vector<std::vector<std::size_t>> byDepth(kMaxPathLength + 1);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (!tree.nodes[i].is_leaf()) byDepth[tree.nodes[i].path.depth()].push_back(i);
  }
  threads = resolve_threads(threads);
  std::vector<SamplingGrid> grids;
  for (int depth = kMaxPathLength; depth >= 0; --depth) {
    const auto& work = byDepth[depth];
    if (work.empty()) continue;
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(work.size()));
    while (grids.size() < workers) grids.emplace_back();
    parallel_items(work.size(), workers, [&](unsigned worker, std::size_t item) {
      const std::size_t node = work[item];
      tree.nodes[node].voxels = sample_node(tree, node, strategy, seed, grids[worker]);
    });
  }
  tree.config.strategy = strategy;
  tree.config.seed = seed;
}

}  // namespace lodforge
