#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "lodforge/ingest.h"

using namespace lodforge;

namespace {

template <typename T>
void store(std::vector<std::uint8_t>& buf, std::size_t at, T v) {
  std::memcpy(buf.data() + at, &v, sizeof(T));
}

/// LAS 1.2 file with one 227-byte header and `count` records of `format`.
std::vector<std::uint8_t> las_file(std::uint8_t format, std::uint16_t recordLength, std::uint32_t count,
                                   double scale = 0.01, double offset = 0.0) {
  std::vector<std::uint8_t> buf(227 + std::size_t{recordLength} * count, 0);
  std::memcpy(buf.data(), "LASF", 4);
  buf[24] = 1;
  buf[25] = 2;
  store<std::uint16_t>(buf, 94, 227);
  store<std::uint32_t>(buf, 96, 227);
  buf[104] = format;
  store<std::uint16_t>(buf, 105, recordLength);
  store<std::uint32_t>(buf, 107, count);
  for (int a = 0; a < 3; ++a) {
    store<double>(buf, 131 + 8 * a, scale);
    store<double>(buf, 155 + 8 * a, offset);
  }
  return buf;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Las, ScaledCoordinatesWithoutColorReadGray) {
  auto buf = las_file(0, 20, 1, 0.01, 0.0);
  store<std::int32_t>(buf, 227, 100);
  store<std::int32_t>(buf, 231, 200);
  store<std::int32_t>(buf, 235, 300);
  const auto pts = parse_las(buf);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].position.x(), 1.0);
  EXPECT_DOUBLE_EQ(pts[0].position.y(), 2.0);
  EXPECT_DOUBLE_EQ(pts[0].position.z(), 3.0);
  EXPECT_EQ(pts[0].color, kGray);
}

TEST(Las, OffsetIsAdded) {
  auto buf = las_file(1, 28, 1, 0.5, 10.0);
  store<std::int32_t>(buf, 227, -4);
  const auto pts = parse_las(buf);
  EXPECT_DOUBLE_EQ(pts[0].position.x(), 8.0);
  EXPECT_DOUBLE_EQ(pts[0].position.y(), 10.0);
}

TEST(Las, Format2ColorKeepsHighByte) {
  auto buf = las_file(2, 26, 1);
  store<std::uint16_t>(buf, 227 + 20, 65535);
  store<std::uint16_t>(buf, 227 + 22, 0);
  store<std::uint16_t>(buf, 227 + 24, 256);
  const auto pts = parse_las(buf);
  EXPECT_EQ(pts[0].color, (ColorRGB{255, 0, 1}));
}

TEST(Las, Format3ColorOffset) {
  auto buf = las_file(3, 34, 2);
  store<std::uint16_t>(buf, 227 + 34 + 28, 0x1200);
  const auto pts = parse_las(buf);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1].color.r, 0x12);
}

TEST(Las, LongerRecordsAreSkippedByLength) {
  auto buf = las_file(0, 24, 2);
  store<std::int32_t>(buf, 227 + 24, 500);
  const auto pts = parse_las(buf);
  EXPECT_DOUBLE_EQ(pts[1].position.x(), 5.0);
}

TEST(Las, ZeroPointsIsEmpty) { EXPECT_TRUE(parse_las(las_file(2, 26, 0)).empty()); }

TEST(Las, BadMagicIsFormatError) {
  auto buf = las_file(0, 20, 1);
  buf[0] = 'X';
  EXPECT_THROW(parse_las(buf), FormatError);
}

TEST(Las, TruncatedRecordsIsIoError) {
  auto buf = las_file(0, 20, 3);
  buf.resize(buf.size() - 5);
  EXPECT_THROW(parse_las(buf), IoError);
}

TEST(Las, TruncatedHeaderIsIoError) {
  auto buf = las_file(0, 20, 0);
  buf.resize(100);
  EXPECT_THROW(parse_las(buf), IoError);
}

TEST(Las, CompressedIsRejected) {
  auto buf = las_file(0, 20, 0);
  buf[104] = 0x80 | 3;
  EXPECT_THROW(parse_las(buf), FormatError);
}

TEST(Ply, AsciiWithColor) {
  const auto pts = parse_ply(bytes_of(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
      "0 0 0 255 0 0\n1.5 -2 3 1 2 3\n"));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].color, (ColorRGB{255, 0, 0}));
  EXPECT_EQ(pts[1].position, Vector3d(1.5, -2, 3));
  EXPECT_EQ(pts[1].color, (ColorRGB{1, 2, 3}));
}

TEST(Ply, AsciiWithoutColorIsGray) {
  const auto pts = parse_ply(bytes_of(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\n"
      "end_header\n4 5 6\n"));
  EXPECT_EQ(pts[0].color, kGray);
}

TEST(Ply, OtherElementsAndListsAreSkipped) {
  const auto pts = parse_ply(bytes_of(
      "ply\nformat ascii 1.0\ncomment hi\nelement vertex 1\nproperty float x\nproperty float y\n"
      "property float z\nproperty float nx\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n1 2 3 0.5\n3 0 0 0\n"));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].position, Vector3d(1, 2, 3));
}

TEST(Ply, BinaryRoundTrip) {
  std::vector<Point> in{{Vector3d(0.125, -7.5, 1e6), {1, 2, 3}}, {Vector3d(3, 2, 1), {250, 128, 0}}};
  const auto out = parse_ply(serialize_ply(in));
  EXPECT_EQ(out, in);
}

TEST(Ply, BigEndianIsRejected) {
  EXPECT_THROW(parse_ply(bytes_of("ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                                  "property float x\nproperty float y\nproperty float z\nend_header\n")),
               FormatError);
}

TEST(Ply, MissingCoordinatesIsFormatError) {
  EXPECT_THROW(parse_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
                                  "property float y\nend_header\n1 2\n")),
               FormatError);
}

TEST(Ply, TruncatedBinaryIsIoError) {
  auto bytes = serialize_ply({{Vector3d(1, 2, 3), {}}});
  bytes.pop_back();
  EXPECT_THROW(parse_ply(bytes), IoError);
}

TEST(Ply, FileRoundTripAndDispatch) {
  const auto path = std::filesystem::temp_directory_path() / "lodforge_ingest_test.ply";
  const auto in = generate({Preset::UniformCube, 100, 3});
  write_ply(path, in);
  EXPECT_EQ(read_points(path), in);
  std::filesystem::remove(path);
  EXPECT_THROW(read_points("cloud.xyz"), FormatError);
}

TEST(Generator, DeterministicPerSeed) {
  for (Preset p : {Preset::UniformCube, Preset::CheckerPlane, Preset::Stadium, Preset::TwoScans}) {
    EXPECT_EQ(generate({p, 1000, 7}), generate({p, 1000, 7}));
    EXPECT_NE(generate({p, 1000, 7}), generate({p, 1000, 8}));
  }
}

TEST(Generator, PointsStayInUnitCube) {
  for (Preset p : {Preset::UniformCube, Preset::CheckerPlane, Preset::Stadium, Preset::TwoScans}) {
    for (const auto& pt : generate({p, 20'000, 2})) {
      EXPECT_TRUE((pt.position.array() >= 0.0).all() && (pt.position.array() <= 1.0).all());
    }
  }
}

TEST(Generator, StadiumDenseShare) {
  const auto pts = generate({Preset::Stadium, 1'000'000, 1});
  const AABB dense = stadium_dense_region();
  std::uint64_t inside = 0;
  for (const auto& p : pts) {
    if ((p.position.array() >= dense.min.array()).all() && (p.position.array() <= dense.max().array()).all()) {
      ++inside;
    }
  }
  // Bernoulli(0.1) over 1M draws: sigma = 300. The sparse part adds ~0.
  EXPECT_NEAR(static_cast<double>(inside), 100'000.0, 1'200.0);
}

TEST(Generator, TwoScansAlternateColors) {
  const auto pts = generate({Preset::TwoScans, 1000, 4});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i].color, i % 2 == 0 ? kScanAColor : kScanBColor);
  }
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    EXPECT_LE((pts[i].position - pts[i + 1].position).cwiseAbs().maxCoeff(), 2e-4);
  }
}

TEST(Generator, CheckerPlaneIsFlatBlackAndWhite) {
  for (const auto& p : generate({Preset::CheckerPlane, 5000, 9})) {
    EXPECT_EQ(p.position.z(), 0.0);
    EXPECT_TRUE(p.color == (ColorRGB{0, 0, 0}) || p.color == (ColorRGB{255, 255, 255}));
  }
}

TEST(Generator, PresetNames) {
  EXPECT_EQ(preset_from_string("uniform"), Preset::UniformCube);
  EXPECT_EQ(preset_from_string("checker-plane"), Preset::CheckerPlane);
  EXPECT_EQ(preset_from_string(to_string(Preset::TwoScans)), Preset::TwoScans);
  EXPECT_THROW(preset_from_string("teapot"), std::invalid_argument);
}
