#include "lodforge/partition.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "lodforge/parallel.h"

namespace lodforge {
namespace {

Vector3i octant_offset(int octant) {
  return Vector3i(octant & 1, (octant >> 1) & 1, (octant >> 2) & 1);
}

Vector3i local_from_index(int level, std::size_t idx) {
  const auto d = static_cast<std::size_t>(CountPyramid::dim(level));
  return Vector3i(static_cast<std::int64_t>(idx % d), static_cast<std::int64_t>((idx / d) % d),
                  static_cast<std::int64_t>(idx / (d * d)));
}

struct FinestCell {
  std::size_t pyramid;
  Vector3i local;
  std::size_t index;
};

/// Finest cell of `pyramid` that contains normalized position `u`.
FinestCell finest_cell(const CountingState& state, std::size_t pyramid, const Vector3d& u) {
  const auto& p = state.pyramids[pyramid];
  const Vector3i cell = grid_cell(u, CountPyramid::dim(p.finest_depth()));
  const Vector3i local = p.local(p.height, cell);
  return {pyramid, local, CountPyramid::index(p.height, local)};
}

/// Follows extension markers in the counters down to the deepest pyramid.
FinestCell descend_counts(const CountingState& state, const Vector3d& u) {
  FinestCell c = finest_cell(state, 0, u);
  while (true) {
    const auto& p = state.pyramids[c.pyramid];
    if (p.levels[p.height][c.index] != kExtended) return c;
    c = finest_cell(state, static_cast<std::size_t>(p.extensions.at(c.index)), u);
  }
}

void add_stat(PartitionStats* stats, std::uint64_t PartitionStats::*field, std::uint64_t n) {
  if (stats) stats->*field += n;
}

}  // namespace

CountPyramid CountPyramid::make(int baseDepth, int height, const Vector3i& anchor,
                                std::int32_t parent) {
  if (height < 0 || baseDepth < 0 || baseDepth + height > kMaxPathLength) {
    throw std::invalid_argument("counting pyramid depth out of range");
  }
  CountPyramid p;
  p.baseDepth = baseDepth;
  p.height = height;
  p.anchor = anchor;
  p.parent = parent;
  p.levels.resize(static_cast<std::size_t>(height) + 1);
  for (int l = 0; l <= height; ++l) {
    const auto d = static_cast<std::size_t>(dim(l));
    p.levels[l].assign(d * d * d, 0u);
  }
  return p;
}

CountingState count(const std::vector<Point>& points, const AABB& bounds, int depth,
                    unsigned threads, PartitionStats* stats) {
  CountingState state;
  state.bounds = bounds;
  state.pyramids.push_back(CountPyramid::make(0, depth, Vector3i::Zero(), -1));
  if (points.size() > kMaxCounter) throw std::invalid_argument("too many points for 32-bit counters");

  auto& grid = state.pyramids[0].levels[depth];
  const auto dim = CountPyramid::dim(depth);
  threads = resolve_threads(threads);
  parallel_chunks(points.size(), threads, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector3i c = cell_of(points[i], bounds, dim);
      auto& counter = grid[CountPyramid::index(depth, c)];
      if (threads > 1) {
        std::atomic_ref<std::uint32_t>(counter).fetch_add(1, std::memory_order_relaxed);
      } else {
        ++counter;
      }
    }
  });
  add_stat(stats, &PartitionStats::countReads, points.size());
  return state;
}

void extend_overfull_cells(CountingState& state, const std::vector<Point>& points,
                           std::uint32_t threshold, int extensionDepth, int maxDepth,
                           PartitionStats* stats) {
  if (extensionDepth < 1) throw std::invalid_argument("extension depth must be >= 1");
  std::vector<std::size_t> frontier{0};
  while (!frontier.empty()) {
    const std::size_t firstNew = state.pyramids.size();
    std::vector<CountPyramid> created;
    for (std::size_t pid : frontier) {
      auto& p = state.pyramids[pid];
      const int finest = p.finest_depth();
      if (finest >= maxDepth) continue;
      const int height = std::min(extensionDepth, maxDepth - finest);
      auto& cells = p.levels[p.height];
      for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        if (cells[idx] == kExtended || cells[idx] <= threshold) continue;
        const Vector3i anchor =
            p.anchor * CountPyramid::dim(p.height) + local_from_index(p.height, idx);
        cells[idx] = kExtended;
        p.extensions.emplace(idx, static_cast<std::int32_t>(firstNew + created.size()));
        created.push_back(CountPyramid::make(finest, height, anchor, static_cast<std::int32_t>(pid)));
      }
    }
    for (auto& q : created) state.pyramids.push_back(std::move(q));
    if (state.pyramids.size() == firstNew) break;

    for (const auto& p : points) {
      const FinestCell c = descend_counts(state, normalized_position(p.position, state.bounds));
      if (c.pyramid < firstNew) continue;
      auto& pyr = state.pyramids[c.pyramid];
      ++pyr.levels[pyr.height][c.index];
    }
    add_stat(stats, &PartitionStats::extendReads, points.size());
    if (stats) {
      ++stats->extensionRounds;
      stats->extendedGrids += state.pyramids.size() - firstNew;
    }

    frontier.clear();
    for (std::size_t id = firstNew; id < state.pyramids.size(); ++id) frontier.push_back(id);
  }
}

void merge(CountingState& state, std::uint32_t threshold) {
  for (std::size_t pid = state.pyramids.size(); pid-- > 0;) {
    auto& p = state.pyramids[pid];
    for (int level = p.height; level >= 1; --level) {
      auto& fine = p.levels[level];
      auto& coarse = p.levels[level - 1];
      const auto d = CountPyramid::dim(level - 1);
      for (std::int64_t z = 0; z < d; ++z) {
        for (std::int64_t y = 0; y < d; ++y) {
          for (std::int64_t x = 0; x < d; ++x) {
            std::array<std::size_t, 8> kids;
            bool flagged = false;
            std::uint64_t sum = 0;
            for (int o = 0; o < 8; ++o) {
              kids[o] = CountPyramid::index(level, 2 * Vector3i(x, y, z) + octant_offset(o));
              const std::uint32_t v = fine[kids[o]];
              if (v == kUnmergeable || v == kExtended) {
                flagged = true;
              } else {
                sum += v;
              }
            }
            auto& parent = coarse[CountPyramid::index(level - 1, Vector3i(x, y, z))];
            if (flagged || sum >= threshold) {
              parent = kUnmergeable;
            } else if (sum > 0) {
              parent = static_cast<std::uint32_t>(sum);
              for (std::size_t k : kids) fine[k] = 0;
            }
          }
        }
      }
    }

    if (p.parent < 0) continue;
    // Hand the root status of the extended grid to its anchor cell.
    const std::uint32_t root = p.levels[0][0];
    if (root == kUnmergeable) continue;
    auto& owner = state.pyramids[static_cast<std::size_t>(p.parent)];
    const std::size_t idx = CountPyramid::index(owner.height, owner.local(owner.height, p.anchor));
    owner.levels[owner.height][idx] = root;
    owner.extensions.erase(idx);
    p.levels[0][0] = 0;
  }
}

TargetPyramid::TargetPyramid(const CountingState& state) {
  cells_.resize(state.pyramids.size());
  for (std::size_t pid = 0; pid < state.pyramids.size(); ++pid) {
    const auto& p = state.pyramids[pid];
    cells_[pid].resize(p.levels.size());
    for (std::size_t l = 0; l < p.levels.size(); ++l) cells_[pid][l].assign(p.levels[l].size(), 0u);
  }
}

Target TargetPyramid::get(std::size_t pyramid, int level, std::size_t cell) const {
  const std::uint32_t v = cells_[pyramid][static_cast<std::size_t>(level)][cell];
  return Target{static_cast<TargetKind>(v >> 30), static_cast<std::int32_t>(v & 0x3FFFFFFFu)};
}

void TargetPyramid::set(std::size_t pyramid, int level, std::size_t cell, Target t) {
  if (t.id < 0 || t.id >= (1 << 30)) throw std::out_of_range("target id exceeds 30 bits");
  cells_[pyramid][static_cast<std::size_t>(level)][cell] =
      (static_cast<std::uint32_t>(t.kind) << 30) | static_cast<std::uint32_t>(t.id);
}

namespace {

class SkeletonBuilder {
 public:
  SkeletonBuilder(const CountingState& state, const BuildConfig& config, Skeleton& out)
      : state_(state), config_(config), out_(out) {}

  std::int32_t visit(std::size_t pid, int level, const Vector3i& local, const NodePath& path,
                     const AABB& bounds) {
    const auto& p = state_.pyramids[pid];
    const std::size_t idx = CountPyramid::index(level, local);
    const std::uint32_t v = p.levels[level][idx];
    if (v == 0) return kNoChild;
    if (v == kExtended) {
      const std::int32_t q = p.extensions.at(idx);
      out_.targets.set(pid, level, idx, Target{TargetKind::Extended, q});
      return visit(static_cast<std::size_t>(q), 0, Vector3i::Zero(), path, bounds);
    }

    auto& nodes = out_.tree.nodes;
    const auto id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.back().path = path;
    nodes.back().bounds = bounds;

    if (v == kUnmergeable) {
      if (level == p.height) throw InvariantError("unmergeable flag on a finest cell");
      nodes.back().kind = NodeKind::Inner;
      out_.capacity.push_back(0);
      out_.targets.set(pid, level, idx, Target{TargetKind::Inner, id});
      for (int o = 0; o < 8; ++o) {
        const std::int32_t child = visit(pid, level + 1, 2 * local + octant_offset(o),
                                         path.child(o), child_bounds(bounds, o));
        nodes[static_cast<std::size_t>(id)].children[o] = child;
      }
      if (nodes[static_cast<std::size_t>(id)].child_count() == 0) {
        throw InvariantError("inner node without children at " + path.to_string());
      }
      return id;
    }

    nodes.back().kind = NodeKind::Leaf;
    nodes.back().oversized = v > config_.threshold;
    if (nodes.back().oversized && path.depth() != config_.maxDepth) {
      throw InvariantError("overfull leaf above the maximum depth at " + path.to_string());
    }
    out_.capacity.push_back(v);
    out_.targets.set(pid, level, idx, Target{TargetKind::Leaf, id});
    return id;
  }

 private:
  const CountingState& state_;
  const BuildConfig& config_;
  Skeleton& out_;
};

}  // namespace

Skeleton build_targets(const CountingState& state, const BuildConfig& config) {
  Skeleton sk{Octree{}, {}, TargetPyramid(state)};
  sk.tree.worldBounds = state.bounds;
  sk.tree.config = config;
  SkeletonBuilder builder(state, config, sk);
  builder.visit(0, 0, Vector3i::Zero(), NodePath{}, state.bounds);
  if (sk.tree.nodes.empty()) throw InvariantError("counting pyramid is empty");
  return sk;
}

void insert(const std::vector<Point>& points, const CountingState& state, Skeleton& skeleton,
            unsigned threads, PartitionStats* stats) {
  std::vector<std::uint32_t> leafOf(points.size());
  const auto& targets = skeleton.targets;

  parallel_chunks(points.size(), resolve_threads(threads),
                  [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector3d u = normalized_position(points[i].position, state.bounds);
      FinestCell c = finest_cell(state, 0, u);
      Target t = targets.get(c.pyramid, state.pyramids[c.pyramid].height, c.index);
      while (t.kind == TargetKind::Extended) {
        c = finest_cell(state, static_cast<std::size_t>(t.id), u);
        t = targets.get(c.pyramid, state.pyramids[c.pyramid].height, c.index);
      }
      // Merged cells are empty; the leaf sits further up the same pyramid.
      int level = state.pyramids[c.pyramid].height;
      Vector3i local = c.local;
      while (t.kind == TargetKind::Empty) {
        if (--level < 0) throw InvariantError("point resolves to no leaf");
        local /= 2;
        t = targets.get(c.pyramid, level, CountPyramid::index(level, local));
      }
      if (t.kind != TargetKind::Leaf) throw InvariantError("point resolves to an inner node");
      leafOf[i] = static_cast<std::uint32_t>(t.id);
    }
  });
  add_stat(stats, &PartitionStats::insertReads, points.size());

  auto& nodes = skeleton.tree.nodes;
  for (std::size_t n = 0; n < nodes.size(); ++n) nodes[n].points.reserve(skeleton.capacity[n]);
  for (std::size_t i = 0; i < points.size(); ++i) nodes[leafOf[i]].points.push_back(points[i]);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (nodes[n].points.size() != skeleton.capacity[n]) {
      throw InvariantError("leaf " + nodes[n].path.to_string() + " received " +
                           std::to_string(nodes[n].points.size()) + " points, counted " +
                           std::to_string(skeleton.capacity[n]));
    }
  }
}

Octree partition(const std::vector<Point>& points, const BuildConfig& config,
                 PartitionStats* stats) {
  if (points.empty()) throw std::invalid_argument("cannot partition an empty point set");
  if (config.threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (config.maxDepth < 0 || config.maxDepth > kMaxPathLength) {
    throw std::invalid_argument("maxDepth must be in [0, 16]");
  }
  if (config.initialDepth < 0) throw std::invalid_argument("initialDepth must be >= 0");
  for (const auto& p : points) {
    if (!p.position.allFinite()) throw std::invalid_argument("point coordinates must be finite");
  }

  const AABB bounds = cubic_bounds(points);
  const int depth = std::min(config.initialDepth, config.maxDepth);
  CountingState state = count(points, bounds, depth, config.threads, stats);
  extend_overfull_cells(state, points, config.threshold, config.extensionDepth, config.maxDepth,
                        stats);
  merge(state, config.threshold);
  Skeleton sk = build_targets(state, config);
  insert(points, state, sk, config.threads, stats);
  sk.tree.pointCount = points.size();
  return std::move(sk.tree);
}

}  // namespace lodforge
