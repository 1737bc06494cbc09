#pragma once

// Reference implementations used only by the tests. They share nothing with
// the library beyond the plain data types: the splitter recurses top-down
// instead of counting and merging, and the samplers evaluate each cell
// directly from its member samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "lodforge/model.h"
#include "lodforge/sampling.h"

namespace oracle {

using lodforge::ColorRGB;
using lodforge::Point;
using lodforge::Vector3d;

struct Leaf {
  std::string path;
  std::vector<std::size_t> indices;  // input order
  bool oversized = false;
};

struct Tree {
  std::vector<std::string> inner;  // paths
  std::vector<Leaf> leaves;
};

struct SplitParams {
  std::uint64_t threshold = 50'000;
  int initialDepth = 8;
  int extensionDepth = 4;
  int maxDepth = 16;
};

class ReferenceSplitter {
 public:
  ReferenceSplitter(const std::vector<Point>& points, SplitParams params)
      : points_(points), params_(params) {
    Vector3d lo = points.front().position, hi = lo;
    for (const auto& p : points) {
      for (int i = 0; i < 3; ++i) {
        lo[i] = std::min(lo[i], p.position[i]);
        hi[i] = std::max(hi[i], p.position[i]);
      }
    }
    min_ = lo;
    size_ = std::max({hi.x() - lo.x(), hi.y() - lo.y(), hi.z() - lo.z()});
    if (!(size_ > 0)) size_ = 1.0;

    // Depths at which a counting grid ends: the initial grid, then each
    // refinement round.
    int d = std::min(params.initialDepth, params.maxDepth);
    gridEnds_.push_back(d);
    while (d < params.maxDepth) {
      d = std::min(d + params.extensionDepth, params.maxDepth);
      gridEnds_.push_back(d);
    }
  }

  Tree run() {
    Tree t;
    std::vector<std::size_t> all(points_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    split(t, 0, "", all);
    return t;
  }

  /// Cell index along one axis at `depth`, from the world cube.
  std::int64_t axis_cell(const Point& p, int axis, int depth) const {
    const double u = (p.position[axis] - min_[axis]) / size_;
    const double scaled = std::floor(u * std::pow(2.0, depth));
    const std::int64_t top = (std::int64_t{1} << depth) - 1;
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(scaled), 0, top);
  }

 private:
  bool is_grid_end(int depth) const {
    return std::find(gridEnds_.begin(), gridEnds_.end(), depth) != gridEnds_.end();
  }

  void split(Tree& t, int depth, const std::string& path, const std::vector<std::size_t>& idx) {
    const std::uint64_t n = idx.size();
    bool leaf;
    if (depth >= params_.maxDepth) {
      leaf = true;
    } else if (is_grid_end(depth)) {
      leaf = n <= params_.threshold;  // only counters above T get refined
    } else {
      leaf = n < params_.threshold;  // groups below T merge into the parent
    }
    if (leaf) {
      t.leaves.push_back(Leaf{path, idx, n > params_.threshold});
      return;
    }
    t.inner.push_back(path);
    std::vector<std::vector<std::size_t>> kids(8);
    for (std::size_t i : idx) {
      int octant = 0;
      for (int a = 0; a < 3; ++a) {
        if (axis_cell(points_[i], a, depth + 1) & 1) octant |= 1 << a;
      }
      kids[octant].push_back(i);
    }
    for (int o = 0; o < 8; ++o) {
      if (!kids[o].empty()) split(t, depth + 1, path + static_cast<char>('0' + o), kids[o]);
    }
  }

  const std::vector<Point>& points_;
  SplitParams params_;
  Vector3d min_;
  double size_ = 1.0;
  std::vector<int> gridEnds_;
};

/// Level-`depth` histogram of the points, keyed by cell.
inline std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::uint64_t> histogram(
    const std::vector<Point>& points, const lodforge::AABB& bounds, int depth) {
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::uint64_t> h;
  const double dim = std::pow(2.0, depth);
  const auto top = static_cast<std::int64_t>(dim) - 1;
  for (const auto& p : points) {
    std::int64_t c[3];
    for (int a = 0; a < 3; ++a) {
      const double u = (p.position[a] - bounds.min[a]) / bounds.size;
      c[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(u * dim)), 0, top);
    }
    ++h[{c[0], c[1], c[2]}];
  }
  return h;
}

// ---------------------------------------------------------------- sampling

struct Sample {
  Vector3d gpos;
  ColorRGB color;
  std::uint32_t ordinal;
};

using Cell = std::tuple<int, int, int>;

/// Child samples of an inner node, projected with the plain node-relative
/// formula.
inline std::vector<Sample> child_samples(const lodforge::Octree& tree, std::size_t node) {
  const auto& parent = tree.nodes[node];
  std::vector<Sample> out;
  std::uint32_t ordinal = 0;
  for (int o = 0; o < 8; ++o) {
    if (parent.children[o] < 0) continue;
    const auto& child = tree.nodes[static_cast<std::size_t>(parent.children[o])];
    for (const auto& p : child.points) {
      Vector3d g;
      for (int a = 0; a < 3; ++a) {
        const double v = (p.position[a] - parent.bounds.min[a]) / parent.bounds.size * 128.0;
        g[a] = std::clamp(v, 0.0, std::nextafter(128.0, 0.0));
      }
      out.push_back({g, p.color, ordinal++});
    }
    for (const auto& v : child.voxels) {
      const Vector3d g(64.0 * (o & 1) + (v.cx + 0.5) / 2.0, 64.0 * ((o >> 1) & 1) + (v.cy + 0.5) / 2.0,
                       64.0 * ((o >> 2) & 1) + (v.cz + 0.5) / 2.0);
      out.push_back({g, v.color, ordinal++});
    }
  }
  return out;
}

inline Cell cell_of(const Vector3d& g) {
  return {static_cast<int>(std::floor(g.x())), static_cast<int>(std::floor(g.y())),
          static_cast<int>(std::floor(g.z()))};
}

inline std::map<Cell, std::vector<const Sample*>> by_cell(const std::vector<Sample>& samples) {
  std::map<Cell, std::vector<const Sample*>> cells;
  for (const auto& s : samples) cells[cell_of(s.gpos)].push_back(&s);
  return cells;
}

inline std::map<Cell, ColorRGB> first_come(const std::vector<Sample>& samples) {
  std::map<Cell, ColorRGB> out;
  for (const auto& [cell, members] : by_cell(samples)) {
    const auto* best = *std::min_element(members.begin(), members.end(),
                                         [](auto* a, auto* b) { return a->ordinal < b->ordinal; });
    out[cell] = best->color;
  }
  return out;
}

inline std::uint64_t splitmix(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t node_key(const std::string& path, std::uint64_t seed) {
  std::uint64_t key = seed;
  for (char c : path) key = splitmix(key * 8 + static_cast<std::uint64_t>(c - '0') + 1);
  return key;
}

inline std::map<Cell, ColorRGB> random_pick(const std::vector<Sample>& samples, std::uint64_t key) {
  std::map<Cell, ColorRGB> out;
  for (const auto& [cell, members] : by_cell(samples)) {
    std::uint32_t best = 0;
    const Sample* winner = nullptr;
    for (const auto* s : members) {
      const auto r = static_cast<std::uint32_t>(splitmix(key ^ s->ordinal) >> 32);
      const std::uint32_t k = (r & 0xfff00000u) | (s->ordinal & 0xfffffu);
      if (!winner || k > best) {
        best = k;
        winner = s;
      }
    }
    out[cell] = winner->color;
  }
  return out;
}

inline std::uint8_t round_half_up(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

inline std::map<Cell, ColorRGB> average(const std::vector<Sample>& samples) {
  std::map<Cell, ColorRGB> out;
  for (const auto& [cell, members] : by_cell(samples)) {
    double r = 0, g = 0, b = 0;
    for (const auto* s : members) {
      r += s->color.r;
      g += s->color.g;
      b += s->color.b;
    }
    const double n = static_cast<double>(members.size());
    // Sums of 8-bit values stay exact in double for any realistic node size.
    out[cell] = ColorRGB{round_half_up(r / n), round_half_up(g / n), round_half_up(b / n)};
  }
  return out;
}

/// Direct weighted sum: every sample within distance 1 of an occupied cell's
/// center contributes 1 - distance.
inline std::map<Cell, ColorRGB> weighted(const std::vector<Sample>& samples) {
  const auto cells = by_cell(samples);
  std::map<Cell, ColorRGB> out;
  for (const auto& [cell, members] : cells) {
    const auto [cx, cy, cz] = cell;
    const Vector3d center(cx + 0.5, cy + 0.5, cz + 0.5);
    double r = 0, g = 0, b = 0, w = 0;
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells.find({cx + dx, cy + dy, cz + dz});
          if (it == cells.end()) continue;
          for (const auto* s : it->second) {
            const double d = (s->gpos - center).norm();
            if (d >= 1.0) continue;
            const double wt = 1.0 - d;
            r += wt * s->color.r;
            g += wt * s->color.g;
            b += wt * s->color.b;
            w += wt;
          }
        }
      }
    }
    out[cell] = ColorRGB{round_half_up(r / w), round_half_up(g / w), round_half_up(b / w)};
  }
  return out;
}

inline std::map<Cell, ColorRGB> as_map(const std::vector<lodforge::Voxel>& voxels) {
  std::map<Cell, ColorRGB> out;
  for (const auto& v : voxels) out[{v.cx, v.cy, v.cz}] = v.color;
  return out;
}

}  // namespace oracle
