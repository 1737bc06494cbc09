#include "lodforge/ingest.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <sstream>

#include "lodforge/splitmix.h"

namespace lodforge {

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed to read " + path.string());
  return bytes;
}

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

// ---------------------------------------------------------------- LAS

struct LasLayout {
  std::size_t minRecordLength;
  std::optional<std::size_t> rgbOffset;
};

LasLayout las_layout(int format) {
  switch (format) {
    case 0: return {20, std::nullopt};
    case 1: return {28, std::nullopt};
    case 2: return {26, 20};
    case 3: return {34, 28};
    case 6: return {30, std::nullopt};
    case 7: return {36, 30};
    case 8: return {38, 30};
    default: throw FormatError("unsupported LAS point data record format " + std::to_string(format));
  }
}

// ---------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  throw FormatError("unknown PLY property type '" + name + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

double ply_load(PlyType t, const std::uint8_t* p) {
  switch (t) {
    case PlyType::Int8: return load<std::int8_t>(p);
    case PlyType::UInt8: return load<std::uint8_t>(p);
    case PlyType::Int16: return load<std::int16_t>(p);
    case PlyType::UInt16: return load<std::uint16_t>(p);
    case PlyType::Int32: return load<std::int32_t>(p);
    case PlyType::UInt32: return load<std::uint32_t>(p);
    case PlyType::Float32: return load<float>(p);
    case PlyType::Float64: return load<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool isList = false;
  PlyType countType = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };

struct PlyHeader {
  PlyFormat format = PlyFormat::Ascii;
  std::vector<PlyElement> elements;
  std::size_t bodyOffset = 0;
};

PlyHeader parse_ply_header(const std::vector<std::uint8_t>& bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::string_view endTag = "end_header";
  const auto end = text.find(endTag);
  if (text.substr(0, 3) != "ply" || end == std::string_view::npos) throw FormatError("not a PLY file");
  auto bodyStart = text.find('\n', end);
  if (bodyStart == std::string_view::npos) throw FormatError("PLY header is not terminated");

  PlyHeader header;
  header.bodyOffset = bodyStart + 1;
  std::istringstream lines{std::string(text.substr(0, end))};
  std::string line;
  bool sawFormat = false;
  while (std::getline(lines, line)) {
    std::istringstream tok(line);
    std::string word;
    tok >> word;
    if (word == "format") {
      std::string fmt;
      tok >> fmt;
      if (fmt == "ascii") {
        header.format = PlyFormat::Ascii;
      } else if (fmt == "binary_little_endian") {
        header.format = PlyFormat::BinaryLittleEndian;
      } else {
        throw FormatError("unsupported PLY format '" + fmt + "'");
      }
      sawFormat = true;
    } else if (word == "element") {
      PlyElement e;
      if (!(tok >> e.name >> e.count)) throw FormatError("malformed PLY element line");
      header.elements.push_back(std::move(e));
    } else if (word == "property") {
      if (header.elements.empty()) throw FormatError("PLY property before any element");
      PlyProperty p;
      std::string type;
      tok >> type;
      if (type == "list") {
        std::string countType, itemType;
        tok >> countType >> itemType;
        p.isList = true;
        p.countType = ply_type(countType);
        p.type = ply_type(itemType);
      } else {
        p.type = ply_type(type);
      }
      if (!(tok >> p.name)) throw FormatError("malformed PLY property line");
      header.elements.back().properties.push_back(std::move(p));
    }
  }
  if (!sawFormat) throw FormatError("PLY header has no format line");
  return header;
}

struct VertexFields {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexFields vertex_fields(const PlyElement& e) {
  VertexFields f;
  for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
    const auto& p = e.properties[i];
    if (p.isList) continue;
    if (p.name == "x") f.x = i;
    if (p.name == "y") f.y = i;
    if (p.name == "z") f.z = i;
    if (p.name == "red") f.r = i;
    if (p.name == "green") f.g = i;
    if (p.name == "blue") f.b = i;
  }
  if (f.x < 0 || f.y < 0 || f.z < 0) throw FormatError("PLY vertex element lacks x/y/z properties");
  return f;
}

std::uint8_t ply_channel(PlyType t, double v) {
  // 16-bit channels keep their high byte, like LAS colors.
  if (t == PlyType::UInt16) return static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> 8);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

Point make_vertex(const PlyElement& e, const VertexFields& f, const std::vector<double>& values) {
  Point p;
  p.position = Vector3d(values[f.x], values[f.y], values[f.z]);
  p.color = kGray;
  if (f.r >= 0 && f.g >= 0 && f.b >= 0) {
    p.color = ColorRGB{ply_channel(e.properties[f.r].type, values[f.r]),
                       ply_channel(e.properties[f.g].type, values[f.g]),
                       ply_channel(e.properties[f.b].type, values[f.b])};
  }
  return p;
}

std::vector<Point> parse_ply_binary(const std::vector<std::uint8_t>& bytes, const PlyHeader& h) {
  std::size_t pos = h.bodyOffset;
  const auto need = [&](std::size_t n) {
    if (pos > bytes.size() || bytes.size() - pos < n) throw IoError("truncated PLY body");
  };
  std::vector<Point> out;
  for (const auto& e : h.elements) {
    const bool isVertex = e.name == "vertex";
    VertexFields f;
    if (isVertex) {
      f = vertex_fields(e);
      out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(e.count, bytes.size())));
    }
    std::vector<double> values(e.properties.size());
    for (std::uint64_t i = 0; i < e.count; ++i) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        if (p.isList) {
          need(ply_size(p.countType));
          const auto n = static_cast<std::size_t>(ply_load(p.countType, bytes.data() + pos));
          pos += ply_size(p.countType);
          need(n * ply_size(p.type));
          pos += n * ply_size(p.type);
        } else {
          need(ply_size(p.type));
          values[k] = ply_load(p.type, bytes.data() + pos);
          pos += ply_size(p.type);
        }
      }
      if (isVertex) out.push_back(make_vertex(e, f, values));
    }
    if (isVertex) return out;
  }
  throw FormatError("PLY file has no vertex element");
}

std::vector<Point> parse_ply_ascii(const std::vector<std::uint8_t>& bytes, const PlyHeader& h) {
  std::istringstream body(std::string(bytes.begin() + static_cast<std::ptrdiff_t>(h.bodyOffset), bytes.end()));
  std::vector<Point> out;
  for (const auto& e : h.elements) {
    const bool isVertex = e.name == "vertex";
    VertexFields f;
    if (isVertex) f = vertex_fields(e);
    std::vector<double> values(e.properties.size());
    for (std::uint64_t i = 0; i < e.count; ++i) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const auto& p = e.properties[k];
        if (p.isList) {
          double n = 0;
          if (!(body >> n)) throw IoError("truncated PLY body");
          for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
            double skip;
            if (!(body >> skip)) throw IoError("truncated PLY body");
          }
        } else if (!(body >> values[k])) {
          throw IoError("truncated PLY body");
        }
      }
      if (isVertex) out.push_back(make_vertex(e, f, values));
    }
    if (isVertex) return out;
  }
  throw FormatError("PLY file has no vertex element");
}

}  // namespace

std::vector<Point> parse_las(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "LASF", 4) != 0) {
    throw FormatError("not a LAS file (missing LASF signature)");
  }
  if (bytes.size() < 227) throw IoError("truncated LAS header");
  const int major = bytes[24];
  const int minor = bytes[25];
  if (major != 1 || minor > 4) {
    throw FormatError("unsupported LAS version " + std::to_string(major) + "." + std::to_string(minor));
  }
  const auto headerSize = load<std::uint16_t>(bytes.data() + 94);
  const auto dataOffset = load<std::uint32_t>(bytes.data() + 96);
  const std::uint8_t formatByte = bytes[104];
  if (formatByte & 0xC0) throw FormatError("compressed LAZ point data is not supported");
  const LasLayout layout = las_layout(formatByte & 0x3F);
  const auto recordLength = load<std::uint16_t>(bytes.data() + 105);
  if (recordLength < layout.minRecordLength) throw FormatError("LAS point record length too small");

  std::uint64_t count = load<std::uint32_t>(bytes.data() + 107);
  if (minor >= 4 && headerSize >= 375) {
    if (bytes.size() < 255) throw IoError("truncated LAS 1.4 header");
    const auto count64 = load<std::uint64_t>(bytes.data() + 247);
    if (count64 != 0) count = count64;
  }
  const Vector3d scale(load<double>(bytes.data() + 131), load<double>(bytes.data() + 139),
                       load<double>(bytes.data() + 147));
  const Vector3d offset(load<double>(bytes.data() + 155), load<double>(bytes.data() + 163),
                        load<double>(bytes.data() + 171));

  if (dataOffset > bytes.size() || (bytes.size() - dataOffset) / recordLength < count) {
    throw IoError("truncated LAS point records");
  }

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::uint8_t* rec = bytes.data() + dataOffset;
  for (std::uint64_t i = 0; i < count; ++i, rec += recordLength) {
    Point p;
    p.position = Vector3d(load<std::int32_t>(rec), load<std::int32_t>(rec + 4), load<std::int32_t>(rec + 8))
                     .cwiseProduct(scale) +
                 offset;
    if (layout.rgbOffset) {
      const std::uint8_t* rgb = rec + *layout.rgbOffset;
      p.color = ColorRGB{static_cast<std::uint8_t>(load<std::uint16_t>(rgb) >> 8),
                         static_cast<std::uint8_t>(load<std::uint16_t>(rgb + 2) >> 8),
                         static_cast<std::uint8_t>(load<std::uint16_t>(rgb + 4) >> 8)};
    } else {
      p.color = kGray;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Point> read_las(const std::filesystem::path& path) { return parse_las(slurp(path)); }

std::vector<Point> parse_ply(const std::vector<std::uint8_t>& bytes) {
  const PlyHeader header = parse_ply_header(bytes);
  if (header.format == PlyFormat::Ascii) return parse_ply_ascii(bytes, header);
  return parse_ply_binary(bytes, header);
}

std::vector<Point> read_ply(const std::filesystem::path& path) { return parse_ply(slurp(path)); }

std::vector<std::uint8_t> serialize_ply(const std::vector<Point>& points) {
  std::ostringstream header;
  header << "ply\n"
         << "format binary_little_endian 1.0\n"
         << "element vertex " << points.size() << "\n"
         << "property double x\n"
         << "property double y\n"
         << "property double z\n"
         << "property uchar red\n"
         << "property uchar green\n"
         << "property uchar blue\n"
         << "end_header\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + points.size() * 27);
  for (const Point& p : points) {
    for (int i = 0; i < 3; ++i) {
      const double v = p.position[i];
      const auto* b = reinterpret_cast<const std::uint8_t*>(&v);
      out.insert(out.end(), b, b + sizeof(double));
    }
    out.push_back(p.color.r);
    out.push_back(p.color.g);
    out.push_back(p.color.b);
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const std::vector<Point>& points) {
  const auto bytes = serialize_ply(points);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("failed to write " + path.string());
}

std::vector<Point> read_points(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".las") return read_las(path);
  if (ext == ".ply") return read_ply(path);
  throw FormatError("unsupported input extension '" + ext + "' (expected .las or .ply)");
}

// ---------------------------------------------------------------- generators

Preset preset_from_string(const std::string& name) {
  if (name == "uniform" || name == "uniform-cube") return Preset::UniformCube;
  if (name == "plane" || name == "checker-plane") return Preset::CheckerPlane;
  if (name == "stadium") return Preset::Stadium;
  if (name == "two-scans") return Preset::TwoScans;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::string to_string(Preset preset) {
  switch (preset) {
    case Preset::UniformCube: return "uniform-cube";
    case Preset::CheckerPlane: return "checker-plane";
    case Preset::Stadium: return "stadium";
    case Preset::TwoScans: return "two-scans";
  }
  return "unknown";
}

AABB stadium_dense_region() {
  constexpr double cell = 1.0 / 256.0;
  constexpr double center = 77.5 * cell;
  constexpr double side = 1.0 / 512.0;
  return AABB{Vector3d::Constant(center - side / 2), side};
}

namespace {

Vector3d uniform_in(SplitMix64& rng, const AABB& box) {
  const double x = rng.uniform();
  const double y = rng.uniform();
  const double z = rng.uniform();
  return box.min + box.size * Vector3d(x, y, z);
}

ColorRGB random_color(SplitMix64& rng) {
  const std::uint64_t v = rng.next();
  return ColorRGB{static_cast<std::uint8_t>(v >> 56), static_cast<std::uint8_t>(v >> 48),
                  static_cast<std::uint8_t>(v >> 40)};
}

double scan_surface(double x, double y) {
  return 0.5 + 0.1 * std::sin(2 * std::numbers::pi * x) * std::sin(2 * std::numbers::pi * y);
}

}  // namespace

std::vector<Point> generate(const GeneratorPreset& preset) {
  if (preset.count < 1) throw std::invalid_argument("preset count must be >= 1");
  SplitMix64 rng(preset.seed);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(preset.count));
  const AABB unit{Vector3d::Zero(), 1.0};

  switch (preset.kind) {
    case Preset::UniformCube:
      for (std::uint64_t i = 0; i < preset.count; ++i) {
        const Vector3d p = uniform_in(rng, unit);
        out.push_back(Point{p, random_color(rng)});
      }
      break;

    case Preset::CheckerPlane:
      for (std::uint64_t i = 0; i < preset.count; ++i) {
        const double x = rng.uniform();
        const double y = rng.uniform();
        const bool white = ((static_cast<int>(8 * x) + static_cast<int>(8 * y)) & 1) != 0;
        const std::uint8_t v = white ? 255 : 0;
        out.push_back(Point{Vector3d(x, y, 0.0), ColorRGB{v, v, v}});
      }
      break;

    case Preset::Stadium: {
      const AABB dense = stadium_dense_region();
      for (std::uint64_t i = 0; i < preset.count; ++i) {
        const bool inDense = rng.uniform() < 0.1;
        const Vector3d p = uniform_in(rng, inDense ? dense : unit);
        out.push_back(Point{p, random_color(rng)});
      }
      break;
    }

    case Preset::TwoScans: {
      // Both scans sample the same surface; each pair shares a base position
      // and differs only by per-scan jitter.
      constexpr double jitter = 1e-4;
      Vector3d base = Vector3d::Zero();
      for (std::uint64_t i = 0; i < preset.count; ++i) {
        if (i % 2 == 0) {
          const double x = rng.uniform();
          const double y = rng.uniform();
          base = Vector3d(x, y, scan_surface(x, y));
        }
        Vector3d p;
        for (int a = 0; a < 3; ++a) p[a] = std::clamp(base[a] + jitter * (2 * rng.uniform() - 1), 0.0, 1.0);
        out.push_back(Point{p, i % 2 == 0 ? kScanAColor : kScanBColor});
      }
      break;
    }
  }
  return out;
}

}  // namespace lodforge
