#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + LODFORGE_CLI + std::string(" ") + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "lodforge_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("gen --preset two-scans --count 60000 --seed 3 -o " + path("scan.ply")).code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, BuildReportsStatsAndIsDeterministic) {
  const auto a = run("build -i " + path("scan.ply") + " -o " + path("a.vlpc") + " -s random -t 2000 --seed 5");
  ASSERT_EQ(a.code, 0);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["points"], 60000);
  EXPECT_EQ(j["strategy"], "random");
  EXPECT_GT(j["nodes"].get<int>(), 1);
  EXPECT_EQ(j["nodes"].get<int>(), j["leaves"].get<int>() + j["innerNodes"].get<int>());
  EXPECT_TRUE(j.contains("throughputMPs"));
  EXPECT_EQ(j["bytes"].get<std::uintmax_t>(), fs::file_size(path("a.vlpc")));

  ASSERT_EQ(run("build -i " + path("scan.ply") + " -o " + path("b.vlpc") + " -s random -t 2000 --seed 5 --threads 2")
                .code,
            0);
  EXPECT_EQ(slurp(path("a.vlpc")), slurp(path("b.vlpc")));
}

TEST_F(Cli, ValidateAndInfo) {
  ASSERT_EQ(run("build -i " + path("scan.ply") + " -o " + path("v.vlpc") + " -s weighted -t 3000").code, 0);
  const auto v = run("validate " + path("v.vlpc"));
  EXPECT_EQ(v.code, 0);
  const auto vj = nlohmann::json::parse(v.out);
  EXPECT_TRUE(vj["passed"].get<bool>());
  EXPECT_GE(vj["checks"].size(), 10u);

  const auto i = run("info " + path("v.vlpc"));
  ASSERT_EQ(i.code, 0);
  const auto ij = nlohmann::json::parse(i.out);
  EXPECT_EQ(ij["magic"], "VLPC");
  EXPECT_EQ(ij["pointCount"], 60000);
  EXPECT_EQ(ij["strategy"], "weighted");
  EXPECT_EQ(ij["depths"][0]["depth"], 0);
}

TEST_F(Cli, ValidateFailsOnCorruptVoxel) {
  ASSERT_EQ(run("build -i " + path("scan.ply") + " -o " + path("c.vlpc") + " -t 3000").code, 0);
  std::string bytes = slurp(path("c.vlpc"));
  const auto info = nlohmann::json::parse(run("info " + path("c.vlpc")).out);
  std::size_t pos = 65;
  for (int k = 0; k < info["nodeCount"].get<int>(); ++k) pos += 15 + static_cast<unsigned char>(bytes[pos]);
  bytes[pos] = static_cast<char>(200);
  std::ofstream(path("c.vlpc"), std::ios::binary | std::ios::trunc) << bytes;
  const auto v = run("validate " + path("c.vlpc"));
  EXPECT_EQ(v.code, 3);
  EXPECT_FALSE(nlohmann::json::parse(v.out)["passed"].get<bool>());
}

TEST_F(Cli, SelectFromFarAway) {
  ASSERT_EQ(run("build -i " + path("scan.ply") + " -o " + path("s.vlpc") + " -t 3000").code, 0);
  const auto far = run("select " + path("s.vlpc") + " --eye 1000,1000,1000 --look-at 0.5,0.5,0.5");
  ASSERT_EQ(far.code, 0);
  const auto j = nlohmann::json::parse(far.out);
  EXPECT_EQ(j["nodes"], 1);
  EXPECT_EQ(j["items"][0]["path"], "");

  const auto near = run("select " + path("s.vlpc") + " --eye 0.5,0.5,2 --look-at 0.5,0.5,0.5 --up 0,1,0 --summary");
  ASSERT_EQ(near.code, 0);
  EXPECT_GT(nlohmann::json::parse(near.out)["nodes"].get<int>(), 1);
}

TEST_F(Cli, ThreadsFromEnvironment) {
  const auto r = run("build -i " + path("scan.ply") + " -o " + path("e.vlpc"), "LODFORGE_THREADS=3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["threads"], 3);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("build -i " + path("missing.ply") + " -o " + path("x.vlpc")).code, 1);
  EXPECT_EQ(run("build -i " + path("scan.ply") + " -o " + path("x.vlpc") + " -s median").code, 1);
  EXPECT_EQ(run("build -i " + path("scan.ply") + " -o " + path("x.vlpc") + " -t 0").code, 1);
  EXPECT_EQ(run("select " + path("scan.ply") + " --eye 1,1,1 --look-at 0,0,0").code, 1);  // not VLPC
  EXPECT_EQ(run("gen --preset teapot --count 10 -o " + path("t.ply")).code, 1);
  std::ofstream(path("junk.vlpc")) << "VLPC";
  EXPECT_EQ(run("validate " + path("junk.vlpc")).code, 1);
}
