#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lodforge/model.h"

namespace lodforge {

/// LAS 1.2-1.4, point formats 0-3 and 6-8. Colors keep the high byte of each
/// 16-bit channel; formats without color read as gray.
std::vector<Point> read_las(const std::filesystem::path& path);
std::vector<Point> parse_las(const std::vector<std::uint8_t>& bytes);

/// ASCII or binary little-endian PLY with x, y, z and optional red, green,
/// blue vertex properties.
std::vector<Point> read_ply(const std::filesystem::path& path);
std::vector<Point> parse_ply(const std::vector<std::uint8_t>& bytes);

/// Binary little-endian PLY, x/y/z as double and red/green/blue as uchar.
void write_ply(const std::filesystem::path& path, const std::vector<Point>& points);
std::vector<std::uint8_t> serialize_ply(const std::vector<Point>& points);

/// Dispatches on the file extension (.las or .ply).
std::vector<Point> read_points(const std::filesystem::path& path);

enum class Preset { UniformCube, CheckerPlane, Stadium, TwoScans };

struct GeneratorPreset {
  Preset kind = Preset::UniformCube;
  std::uint64_t count = 1;
  std::uint64_t seed = 0;
};

/// Accepts "uniform"/"uniform-cube", "plane"/"checker-plane", "stadium",
/// "two-scans".
Preset preset_from_string(const std::string& name);
std::string to_string(Preset preset);

inline constexpr ColorRGB kScanAColor{200, 60, 60};
inline constexpr ColorRGB kScanBColor{60, 60, 200};

/// Dense sub-cube of the stadium preset: side 1/512, centered in one cell of
/// a 256^3 grid over the unit cube.
AABB stadium_dense_region();

/// Deterministic synthetic cloud inside [0,1]^3.
std::vector<Point> generate(const GeneratorPreset& preset);

}  // namespace lodforge
