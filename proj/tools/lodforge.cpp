// lodforge: build, validate, inspect and traverse VLPC level-of-detail files.
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 internal invariant violation,
// 3 validation failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lodforge/codec.h"
#include "lodforge/ingest.h"
#include "lodforge/parallel.h"
#include "lodforge/partition.h"
#include "lodforge/sampling.h"
#include "lodforge/traversal.h"
#include "lodforge/validate.h"

using json = nlohmann::json;
using namespace lodforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitValidation = 3;

/// Usage errors detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const json& j) { std::cout << j.dump() << '\n'; }

Vector3d parse_vector(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + " expects x,y,z but got '" + text + "'");
    }
  }
  if (values.size() != 3) throw UsageError(flag + " expects x,y,z but got '" + text + "'");
  return Vector3d(values[0], values[1], values[2]);
}

std::pair<int, int> parse_viewport(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t usedW = 0, usedH = 0;
    const std::string w = text.substr(0, x), h = text.substr(x + 1);
    const int width = std::stoi(w, &usedW);
    const int height = std::stoi(h, &usedH);
    if (usedW != w.size() || usedH != h.size()) throw std::invalid_argument(text);
    if (width <= 0 || height <= 0) throw UsageError("--viewport must be positive, got '" + text + "'");
    return {width, height};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw UsageError("--viewport expects WxH but got '" + text + "'");
  }
}

// ---------------------------------------------------------------- build

struct BuildOptions {
  std::string input;
  std::string output;
  std::string strategy = "first-come";
  std::uint32_t threshold = 50'000;
  std::uint64_t seed = 0;
  int maxDepth = kMaxPathLength;
  unsigned threads = 0;
};

int cmd_build(const BuildOptions& opt) {
  using Clock = std::chrono::steady_clock;
  BuildConfig config;
  config.threshold = opt.threshold;
  config.maxDepth = opt.maxDepth;
  config.strategy = strategy_from_string(opt.strategy);
  config.seed = opt.seed;
  config.threads = resolve_threads(opt.threads);

  const std::vector<Point> points = read_points(opt.input);
  if (points.empty()) throw FormatError("input contains no points");
  std::cerr << "read " << points.size() << " points\n";

  const auto t0 = Clock::now();
  Octree tree = partition(points, config);
  const auto t1 = Clock::now();
  std::cerr << "split into " << tree.leaf_count() << " leaves\n";
  build_lod(tree, config.strategy, config.seed, config.threads);
  const auto t2 = Clock::now();

  for (const auto& check : check_invariants(tree)) {
    if (!check.passed) throw InvariantError(check.name + ": " + check.detail);
  }
  const std::size_t bytes = codec::encode_file(tree, opt.output);

  const double split = std::chrono::duration<double>(t1 - t0).count();
  const double voxelize = std::chrono::duration<double>(t2 - t1).count();
  const double total = split + voxelize;
  const std::size_t leaves = tree.leaf_count();
  emit(json{{"points", points.size()},
            {"nodes", tree.nodes.size()},
            {"leaves", leaves},
            {"innerNodes", tree.nodes.size() - leaves},
            {"maxDepth", tree.max_depth()},
            {"buildSeconds", total},
            {"throughputMPs", total > 0 ? points.size() / total / 1e6 : 0.0},
            {"splitSeconds", split},
            {"voxelizeSeconds", voxelize},
            {"strategy", opt.strategy},
            {"threads", config.threads},
            {"bytes", bytes}});
  return kExitOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& path, bool pretty) {
  const Octree tree = codec::decode_file(path);
  const auto checks = check_invariants(tree);
  const bool ok = all_passed(checks);
  if (pretty) {
    for (const auto& c : checks) {
      std::printf("%-18s %s", c.name.c_str(), c.passed ? "pass" : "FAIL");
      if (!c.passed) std::printf("  (%llu) %s", static_cast<unsigned long long>(c.violations), c.detail.c_str());
      std::printf("\n");
    }
  } else {
    json list = json::array();
    for (const auto& c : checks) {
      list.push_back({{"name", c.name}, {"passed", c.passed}, {"violations", c.violations}, {"detail", c.detail}});
    }
    emit(json{{"file", path}, {"passed", ok}, {"checks", list}});
  }
  return ok ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------- select

struct SelectOptions {
  std::string path;
  std::string eye;
  std::string lookAt;
  std::string up = "0,0,1";
  double fovY = 60.0;
  std::string viewport = "1920x1080";
  double thresholdPx = kDefaultThresholdPx;
  double nearPlane = 0.01;
  double farPlane = 1.0e6;
  bool summary = false;
};

int cmd_select(const SelectOptions& opt) {
  Camera cam;
  cam.eye = parse_vector(opt.eye, "--eye");
  cam.lookAt = parse_vector(opt.lookAt, "--look-at");
  cam.up = parse_vector(opt.up, "--up");
  cam.fovY = opt.fovY;
  std::tie(cam.viewportW, cam.viewportH) = parse_viewport(opt.viewport);
  cam.nearPlane = opt.nearPlane;
  cam.farPlane = opt.farPlane;
  try {
    cam.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const Octree tree = codec::decode_file(opt.path);
  const SelectionResult sel = select(tree, cam, opt.thresholdPx);
  json out{{"frame", 0},
           {"nodes", sel.items.size()},
           {"pointsDrawn", sel.points_drawn()},
           {"voxelsDrawn", sel.voxels_drawn()},
           {"culled", sel.culledNodes},
           {"thresholdPx", sel.threshold}};
  if (!opt.summary) {
    json items = json::array();
    for (const auto& item : sel.items) {
      items.push_back({{"path", item.path.to_string()},
                       {"kind", item.kind == NodeKind::Leaf ? "leaf" : "inner"},
                       {"totalSamples", item.totalSamples},
                       {"drawnSamples", item.drawnSamples},
                       {"discardedOctants", item.discardedOctants}});
    }
    out["items"] = std::move(items);
  }
  emit(out);
  return kExitOk;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string& preset, std::uint64_t count, std::uint64_t seed, const std::string& output) {
  GeneratorPreset p;
  try {
    p.kind = preset_from_string(preset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.count = count;
  p.seed = seed;
  write_ply(output, generate(p));
  emit(json{{"preset", to_string(p.kind)}, {"count", count}, {"seed", seed}, {"output", output}});
  return kExitOk;
}

// ---------------------------------------------------------------- info

int cmd_info(const std::string& path, bool pretty) {
  const Octree tree = codec::decode_file(path);
  struct Row {
    std::uint64_t nodes = 0, leaves = 0, inner = 0, points = 0, voxels = 0;
  };
  std::map<int, Row> rows;
  for (const auto& n : tree.nodes) {
    Row& r = rows[n.path.depth()];
    ++r.nodes;
    if (n.is_leaf()) {
      ++r.leaves;
      r.points += n.points.size();
    } else {
      ++r.inner;
      r.voxels += n.voxels.size();
    }
  }

  if (pretty) {
    std::printf("world min  %.6f %.6f %.6f  size %.6f\n", tree.worldBounds.min.x(), tree.worldBounds.min.y(),
                tree.worldBounds.min.z(), tree.worldBounds.size);
    std::printf("points %llu  nodes %zu  T %u  strategy %s  seed %llu\n",
                static_cast<unsigned long long>(tree.pointCount), tree.nodes.size(), tree.config.threshold,
                to_string(tree.config.strategy).c_str(), static_cast<unsigned long long>(tree.config.seed));
    std::printf("%5s %8s %8s %8s %12s %12s\n", "depth", "nodes", "leaves", "inner", "points", "voxels");
    for (const auto& [depth, r] : rows) {
      std::printf("%5d %8llu %8llu %8llu %12llu %12llu\n", depth, static_cast<unsigned long long>(r.nodes),
                  static_cast<unsigned long long>(r.leaves), static_cast<unsigned long long>(r.inner),
                  static_cast<unsigned long long>(r.points), static_cast<unsigned long long>(r.voxels));
    }
    return kExitOk;
  }

  json depths = json::array();
  for (const auto& [depth, r] : rows) {
    depths.push_back({{"depth", depth},
                      {"nodes", r.nodes},
                      {"leaves", r.leaves},
                      {"innerNodes", r.inner},
                      {"points", r.points},
                      {"voxels", r.voxels}});
  }
  const auto& b = tree.worldBounds;
  emit(json{{"magic", "VLPC"},
            {"version", codec::kVersion},
            {"worldMin", {b.min.x(), b.min.y(), b.min.z()}},
            {"worldSize", b.size},
            {"threshold", tree.config.threshold},
            {"pointCount", tree.pointCount},
            {"nodeCount", tree.nodes.size()},
            {"strategy", to_string(tree.config.strategy)},
            {"seed", tree.config.seed},
            {"depths", depths}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-of-detail octree construction for colored point clouds"};
  app.require_subcommand(1);

  BuildOptions build;
  auto* buildCmd = app.add_subcommand("build", "Build a VLPC file from a LAS or PLY point cloud");
  buildCmd->add_option("-i,--input", build.input, "Input .las or .ply")->required();
  buildCmd->add_option("-o,--output", build.output, "Output .vlpc")->required();
  buildCmd->add_option("-s,--strategy", build.strategy, "first-come, random, average or weighted")
      ->check(CLI::IsMember({"first-come", "random", "average", "weighted"}))
      ->capture_default_str();
  buildCmd->add_option("-t,--threshold", build.threshold, "Maximum points per leaf")
      ->check(CLI::Range(1u, 0xFFFFFFFDu))
      ->capture_default_str();
  buildCmd->add_option("--seed", build.seed, "Seed of the random strategy")->capture_default_str();
  buildCmd->add_option("--max-depth", build.maxDepth, "Deepest octree level")
      ->check(CLI::Range(0, kMaxPathLength))
      ->capture_default_str();
  buildCmd->add_option("--threads", build.threads, "Worker threads (0 = all cores)")
      ->envname("LODFORGE_THREADS");

  std::string validatePath;
  bool validatePretty = false;
  auto* validateCmd = app.add_subcommand("validate", "Check every structural invariant of a VLPC file");
  validateCmd->add_option("file", validatePath, "VLPC file")->required();
  validateCmd->add_flag("--pretty", validatePretty, "Human-readable table");

  SelectOptions sel;
  auto* selectCmd = app.add_subcommand("select", "Run LOD node selection for one camera");
  selectCmd->add_option("file", sel.path, "VLPC file")->required();
  selectCmd->add_option("--eye", sel.eye, "Camera position x,y,z")->required();
  selectCmd->add_option("--look-at", sel.lookAt, "Target point x,y,z")->required();
  selectCmd->add_option("--up", sel.up, "Up vector x,y,z")->capture_default_str();
  selectCmd->add_option("--fovy", sel.fovY, "Vertical field of view in degrees")->capture_default_str();
  selectCmd->add_option("--viewport", sel.viewport, "Viewport WxH in pixels")->capture_default_str();
  selectCmd->add_option("--threshold-px", sel.thresholdPx, "Expansion threshold in pixels")->capture_default_str();
  selectCmd->add_option("--near", sel.nearPlane, "Near plane distance")->capture_default_str();
  selectCmd->add_option("--far", sel.farPlane, "Far plane distance")->capture_default_str();
  selectCmd->add_flag("--summary", sel.summary, "Omit the per-node item list");

  std::string preset;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::string genOutput;
  auto* genCmd = app.add_subcommand("gen", "Write a synthetic point cloud as binary PLY");
  genCmd->add_option("--preset", preset, "uniform, plane, stadium or two-scans")->required();
  genCmd->add_option("--count", count, "Number of points")->required()->check(CLI::PositiveNumber);
  genCmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
  genCmd->add_option("-o,--output", genOutput, "Output .ply")->required();

  std::string infoPath;
  bool infoPretty = false;
  auto* infoCmd = app.add_subcommand("info", "Print header fields and per-depth histograms");
  infoCmd->add_option("file", infoPath, "VLPC file")->required();
  infoCmd->add_flag("--pretty", infoPretty, "Human-readable table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*buildCmd) return cmd_build(build);
    if (*validateCmd) return cmd_validate(validatePath, validatePretty);
    if (*selectCmd) return cmd_select(sel);
    if (*genCmd) return cmd_gen(preset, count, seed, genOutput);
    if (*infoCmd) return cmd_info(infoPath, infoPretty);
  } catch (const InvariantError& e) {
    std::cerr << "internal invariant violated: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
