#include "lodforge/codec.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

namespace lodforge::codec {

static_assert(std::endian::native == std::endian::little, "VLPC I/O assumes a little-endian host");

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ > in_.size() || in_.size() - pos_ < sizeof(T)) {
      throw IoError(std::string("truncated VLPC file while reading ") + what);
    }
    T value;
    std::memcpy(&value, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
};

std::size_t record_size(NodeKind kind) {
  return kind == NodeKind::Leaf ? kPointRecordSize : kVoxelRecordSize;
}

std::vector<std::uint8_t> read_all(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed to read VLPC stream");
  return bytes;
}

FileHeader parse_header(ByteReader& r, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a VLPC file (bad magic)");
  }
  r.get<std::uint32_t>("magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw FormatError("unsupported VLPC version " + std::to_string(version));
  FileHeader h;
  for (int i = 0; i < 3; ++i) h.worldMin[i] = r.get<double>("world min");
  h.worldSize = r.get<double>("world size");
  h.threshold = r.get<std::uint32_t>("threshold");
  h.pointCount = r.get<std::uint64_t>("point count");
  h.nodeCount = r.get<std::uint32_t>("node count");
  const auto strategy = r.get<std::uint8_t>("strategy");
  if (strategy > 3) throw FormatError("unknown strategy code " + std::to_string(strategy));
  h.strategy = static_cast<Strategy>(strategy);
  h.seed = r.get<std::uint64_t>("seed");
  if (!(h.worldSize > 0.0) || !h.worldMin.allFinite()) throw FormatError("invalid world bounds");
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode(const Octree& tree) {
  if (tree.nodes.empty()) throw std::invalid_argument("cannot encode an empty tree");
  std::vector<std::uint8_t> out;
  ByteWriter w(out);

  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  w.put(kVersion);
  for (int i = 0; i < 3; ++i) w.put(tree.worldBounds.min[i]);
  w.put(tree.worldBounds.size);
  w.put(tree.config.threshold);
  w.put(tree.pointCount);
  w.put(static_cast<std::uint32_t>(tree.nodes.size()));
  w.put(static_cast<std::uint8_t>(tree.config.strategy));
  w.put(tree.config.seed);

  // Nodes are held in pre-order, which is the path order of the table.
  std::uint64_t offset = 0;
  for (const auto& n : tree.nodes) {
    w.put(static_cast<std::uint8_t>(n.path.depth()));
    for (int l = 0; l < n.path.depth(); ++l) w.put(static_cast<std::uint8_t>(n.path[l]));
    w.put(static_cast<std::uint8_t>(n.kind));
    w.put(static_cast<std::uint8_t>(n.oversized ? 1 : 0));
    w.put(static_cast<std::uint32_t>(n.sample_count()));
    w.put(offset);
    offset += n.sample_count() * record_size(n.kind);
  }

  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      for (const Point& p : n.points) {
        for (int i = 0; i < 3; ++i) w.put(static_cast<float>(p.position[i] - n.bounds.min[i]));
        w.put(p.color.r);
        w.put(p.color.g);
        w.put(p.color.b);
        w.put(std::uint8_t{0});
      }
    } else {
      for (const Voxel& v : n.voxels) {
        w.put(v.cx);
        w.put(v.cy);
        w.put(v.cz);
        w.put(v.color.r);
        w.put(v.color.g);
        w.put(v.color.b);
      }
    }
  }
  return out;
}

std::size_t encode(const Octree& tree, std::ostream& out) {
  const auto bytes = encode(tree);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write VLPC stream");
  return bytes.size();
}

std::size_t encode_file(const Octree& tree, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t n = encode(tree, out);
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
  return n;
}

FileHeader read_header(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, 0);
  return parse_header(r, bytes);
}

Octree decode(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, 0);
  const FileHeader h = parse_header(r, bytes);
  if (h.nodeCount == 0) throw FormatError("VLPC file has no root node");

  Octree tree;
  tree.worldBounds = AABB{h.worldMin, h.worldSize};
  tree.config.threshold = h.threshold;
  tree.config.strategy = h.strategy;
  tree.config.seed = h.seed;
  tree.pointCount = h.pointCount;

  std::vector<NodeRecord> records;
  records.reserve(std::min<std::size_t>(h.nodeCount, bytes.size() / kNodeRecordFixedSize));
  for (std::uint32_t i = 0; i < h.nodeCount; ++i) {
    NodeRecord rec;
    const auto len = r.get<std::uint8_t>("node path length");
    if (len > kMaxPathLength) throw FormatError("node path longer than 16 levels");
    for (int l = 0; l < len; ++l) {
      const auto octant = r.get<std::uint8_t>("node path");
      if (octant > 7) throw FormatError("node path octant out of range");
      rec.path = rec.path.child(octant);
    }
    const auto kind = r.get<std::uint8_t>("node kind");
    if (kind > 1) throw FormatError("unknown node kind " + std::to_string(kind));
    rec.kind = static_cast<NodeKind>(kind);
    rec.flags = r.get<std::uint8_t>("node flags");
    rec.sampleCount = r.get<std::uint32_t>("node sample count");
    rec.payloadOffset = r.get<std::uint64_t>("node payload offset");
    records.push_back(rec);
  }

  const std::size_t payloadStart = r.position();
  const std::uint64_t payloadSize = bytes.size() - payloadStart;

  std::map<NodePath, std::size_t> index;
  std::uint64_t end = 0;
  tree.nodes.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const NodeRecord& rec = records[i];
    if (i == 0 && !rec.path.is_root()) throw FormatError("first node record is not the root");
    if (i > 0) {
      if (rec.path.is_root()) throw FormatError("duplicate root node");
      if (!(records[i - 1].path < rec.path)) {
        throw FormatError("node records out of order or duplicated at " + rec.path.to_string());
      }
      const auto parent = index.find(rec.path.parent());
      if (parent == index.end()) throw FormatError("node " + rec.path.to_string() + " has no parent");
      auto& p = tree.nodes[parent->second];
      if (p.is_leaf()) throw FormatError("node " + rec.path.to_string() + " hangs below a leaf");
      p.children[rec.path.last_octant()] = static_cast<std::int32_t>(i);
    }
    index.emplace(rec.path, i);

    if (rec.payloadOffset < end) throw FormatError("overlapping payload at " + rec.path.to_string());
    const std::uint64_t bytesNeeded = std::uint64_t{rec.sampleCount} * record_size(rec.kind);
    if (rec.payloadOffset > payloadSize || payloadSize - rec.payloadOffset < bytesNeeded) {
      throw IoError("truncated VLPC payload at node " + rec.path.to_string());
    }
    end = rec.payloadOffset + bytesNeeded;

    OctreeNode& n = tree.nodes[i];
    n.path = rec.path;
    n.bounds = bounds_of(tree.worldBounds, rec.path);
    n.kind = rec.kind;
    n.oversized = (rec.flags & 1u) != 0;
    const std::uint8_t* data = bytes.data() + payloadStart + rec.payloadOffset;
    if (n.is_leaf()) {
      n.points.resize(rec.sampleCount);
      for (auto& p : n.points) {
        for (int a = 0; a < 3; ++a) {
          float off;
          std::memcpy(&off, data + 4 * a, sizeof(float));
          p.position[a] = n.bounds.min[a] + static_cast<double>(off);
        }
        p.color = ColorRGB{data[12], data[13], data[14]};
        data += kPointRecordSize;
      }
    } else {
      n.voxels.resize(rec.sampleCount);
      for (auto& v : n.voxels) {
        v = Voxel{data[0], data[1], data[2], ColorRGB{data[3], data[4], data[5]}};
        data += kVoxelRecordSize;
      }
    }
  }
  return tree;
}

Octree decode(std::istream& in) { return decode(read_all(in)); }

Octree decode_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return decode(read_all(in));
}

}  // namespace lodforge::codec
