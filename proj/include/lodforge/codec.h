#pragma once

// VLPC: little-endian serialization of a built octree.
//
//   header      65 bytes  magic "VLPC", u32 version, 3 x f64 world min,
//                         f64 world size, u32 T, u64 point count,
//                         u32 node count, u8 strategy, u64 seed
//   node table  per node: u8 path length, one byte per octant, u8 kind
//                         (0 leaf, 1 inner), u8 flags (bit 0 oversized),
//                         u32 sample count, u64 payload offset
//   payload     leaf point: 3 x f32 offset from node min, r, g, b, 0 (16 bytes)
//               voxel:      cx, cy, cz, r, g, b                  (6 bytes)
//
// Node records are in path order (a prefix sorts first) and payload offsets
// are relative to the start of the payload section.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lodforge/model.h"

namespace lodforge::codec {

inline constexpr char kMagic[4] = {'V', 'L', 'P', 'C'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 65;
inline constexpr std::size_t kNodeRecordFixedSize = 15;  // excluding path bytes
inline constexpr std::size_t kPointRecordSize = 16;
inline constexpr std::size_t kVoxelRecordSize = 6;

struct FileHeader {
  Vector3d worldMin = Vector3d::Zero();
  double worldSize = 1.0;
  std::uint32_t threshold = 0;
  std::uint64_t pointCount = 0;
  std::uint32_t nodeCount = 0;
  Strategy strategy = Strategy::FirstCome;
  std::uint64_t seed = 0;
};

struct NodeRecord {
  NodePath path;
  NodeKind kind = NodeKind::Leaf;
  std::uint8_t flags = 0;
  std::uint32_t sampleCount = 0;
  std::uint64_t payloadOffset = 0;
};

/// Serialized bytes of `tree`.
std::vector<std::uint8_t> encode(const Octree& tree);
/// Writes `tree` to `out`; returns the number of bytes written.
std::size_t encode(const Octree& tree, std::ostream& out);
std::size_t encode_file(const Octree& tree, const std::filesystem::path& path);

/// Rebuilds the tree. Throws FormatError for malformed content and IoError
/// for truncation; never returns a partial tree.
Octree decode(const std::vector<std::uint8_t>& bytes);
Octree decode(std::istream& in);
Octree decode_file(const std::filesystem::path& path);

/// Header and node table only, for inspection without payload decoding.
FileHeader read_header(const std::vector<std::uint8_t>& bytes);

}  // namespace lodforge::codec
