#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(PLATEAU_FLOW_EXE) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("plateau_flow_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string configs(const std::string& name) { return std::string(PLATEAU_FLOW_CONFIGS) + "/" + name; }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 64);
  EXPECT_EQ(cli("frobnicate").code, 64);
  EXPECT_EQ(cli("run").code, 64);
  EXPECT_EQ(cli("run " + configs("demo.cfg") + " --preset catenoid-0.8").code, 64);
  EXPECT_EQ(cli("run --preset nope").code, 64);
  EXPECT_EQ(cli("verify --level deep").code, 64);
  EXPECT_EQ(cli("curves show nope").code, 64);
  EXPECT_EQ(cli("curves show circles -n 2").code, 64);
}

TEST(Cli, MissingCurveFileIsInputError) {
  const fs::path d = scratch_dir("missing");
  {
    std::ofstream f(d / "bad.cfg");
    f << "[curves]\nminus = nowhere/lower.txt\nplus = nowhere/upper.txt\n[output]\ndir = " << (d / "out").string() << "\n";
  }
  EXPECT_EQ(cli("run " + (d / "bad.cfg").string()).code, 64);
  EXPECT_EQ(cli("run " + (d / "absent.cfg").string()).code, 64);
  {
    std::ofstream f(d / "dup.cfg");
    f << "[time]\nh = 0.1\nh = 0.1\n";
  }
  EXPECT_EQ(cli("run " + (d / "dup.cfg").string()).code, 64);
  fs::remove_all(d);
}

TEST(Cli, CurvesList) {
  const Result r = cli("curves list");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("circles r=1 sep=0.8"), std::string::npos);
  EXPECT_NE(r.out.find("catenoid-0.8"), std::string::npos);
  EXPECT_NE(r.out.find("goldschmidt-2.4"), std::string::npos);
}

TEST(Cli, CurvesShowClosesTheLoop) {
  const Result r = cli("curves show circles");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::vector<double>> block;
  int blocks = 0;
  auto check = [&]() {
    ASSERT_EQ(block.size(), 256u);
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(block.front()[d], block.back()[d], 1e-12);
    for (const auto& p : block) EXPECT_NEAR(std::hypot(p[0], p[1]), 1.0, 1e-3);
    ++blocks;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!block.empty()) check();
      block.clear();
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> p(3);
    ls >> p[0] >> p[1] >> p[2];
    block.push_back(p);
  }
  check();
  EXPECT_EQ(blocks, 2);
}

TEST(Cli, VerifyQuickPasses) {
  const Result r = cli("verify");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Cli, VerifyDetectsCorruptCutoff) {
  const Result r = cli("verify --corrupt-cutoff");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FAIL moebius"), std::string::npos) << r.out;
}

TEST(Cli, RunWritesOutputsAndReproduces) {
  const fs::path d = scratch_dir("run");
  const Result r = cli("run " + configs("demo.cfg") + " -o " + (d / "a").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("classification:"), std::string::npos);
  for (const char* f : {"trajectory.csv", "final_state.txt", "effective_config.txt", "meshes/step_000000.obj",
                        "meshes/step_000025.obj"})
    EXPECT_TRUE(fs::exists(d / "a" / f)) << f;

  // the effective config alone reproduces the run
  ASSERT_EQ(cli("run " + (d / "a" / "effective_config.txt").string() + " -q -o " + (d / "b").string()).code, 0);
  const std::string a = slurp(d / "a" / "trajectory.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(d / "b" / "trajectory.csv"));
  EXPECT_EQ(slurp(d / "a" / "final_state.txt"), slurp(d / "b" / "final_state.txt"));
  fs::remove_all(d);
}
