#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "plateau_flow/io.hpp"

using namespace plateau_flow;
namespace fs = std::filesystem;

namespace {

io::RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_config(in, "test.cfg", "/base");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const io::ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string curve_error(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_curve_points(in, "c.txt");
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

flow::FlowTrajectory short_run() {
  flow::FlowConfig cfg;
  cfg.n_x = 8;
  cfg.n_theta = 12;
  cfg.h = 0.05;
  cfg.T = 0.15;
  const auto& cp = presets::find_curves("circles");
  return flow::run(cfg, mesh::BoundaryCurve(cp.minus), mesh::BoundaryCurve(cp.plus));
}

}  // namespace

TEST(Config, Defaults) {
  const io::RunConfig rc = parse("");
  EXPECT_EQ(rc.curve_preset, "circles");
  EXPECT_EQ(rc.flow.n_x, 64);
  EXPECT_EQ(rc.flow.n_theta, 48);
  EXPECT_EQ(rc.flow.h, 1e-2);
  EXPECT_EQ(rc.output_dir, "out");
}

TEST(Config, SectionsCommentsAndScenario) {
  const io::RunConfig rc = parse(
      "# demo\n"
      "[time]\nh = 0.02   # coarse\n"
      "[grid]\nn_x = 32\n"
      "[solver]\nlinear = pcg\nclamp = yes\n"
      "[curves]\nminus = a.txt\nplus = /abs/b.txt\n");
  EXPECT_EQ(rc.flow.h, 0.02);
  EXPECT_EQ(rc.flow.n_x, 32);
  EXPECT_EQ(rc.flow.solver, plateau::LinearSolver::PCG);
  EXPECT_TRUE(rc.flow.clamp);
  EXPECT_EQ(rc.minus_file, "/base/a.txt");
  EXPECT_EQ(rc.plus_file, "/abs/b.txt");

  // explicit keys override the scenario
  const io::RunConfig g = parse("[time]\nh = 0.05\n");
  EXPECT_EQ(g.flow.T, 20.0);
  const io::RunConfig gs = parse("scenario = goldschmidt-2.4\n[time]\nh = 0.05\n");
  EXPECT_EQ(gs.flow.T, 150.0);
  EXPECT_EQ(gs.flow.h, 0.05);
  EXPECT_EQ(gs.curve_preset, "circles-wide");
}

TEST(Config, RoundTrip) {
  const io::RunConfig rc = parse(
      "scenario = catenoid-0.8\n[time]\nh = 0.015\nT = 1.25\n[stop]\nstop_on_stationary = false\n"
      "[output]\ndir = results\ndiag_stride = 3\n[metric]\nell_init = 1.5\n");
  std::ostringstream a;
  io::write_config(a, rc);
  std::istringstream in(a.str());
  const io::RunConfig back = io::parse_config(in);
  std::ostringstream b;
  io::write_config(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.flow.h, 0.015);
  EXPECT_EQ(back.flow.T, 1.25);
  EXPECT_FALSE(back.flow.stop_on_stationary);
  EXPECT_EQ(back.flow.diag_stride, 3);
  EXPECT_EQ(back.output_dir, "results");
  EXPECT_EQ(back.flow.ell_init, 1.5);
}

TEST(Config, ErrorsNameTheLine) {
  EXPECT_NE(error_of("[time]\nh = 0.1\nh = 0.2\n").find("test.cfg:3:"), std::string::npos);
  EXPECT_NE(error_of("[time]\nh = 0.1\nh = 0.2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("\n[grid]\nwidth = 3\n").find("test.cfg:3: unknown key 'grid.width'"), std::string::npos);
  EXPECT_NE(error_of("[time]\nh = fast\n").find("test.cfg:2:"), std::string::npos);
  EXPECT_NE(error_of("just words\n").find("test.cfg:1:"), std::string::npos);
  EXPECT_NE(error_of("[time\n").find("test.cfg:1:"), std::string::npos);
  EXPECT_NE(error_of("scenario = nope\n").find("unknown scenario"), std::string::npos);
  EXPECT_NE(error_of("[curves]\npreset = nope\n").find("unknown curve preset"), std::string::npos);
  EXPECT_NE(error_of("[solver]\nlinear = lu\n").find("bad value"), std::string::npos);
  EXPECT_NE(error_of("[solver]\nclamp = maybe\n").find("bad value"), std::string::npos);
  EXPECT_NE(error_of("[curves]\nminus = a.txt\n").find("together"), std::string::npos);
  EXPECT_NE(error_of("[time]\nh = -1\n").find("h must be positive"), std::string::npos);
  EXPECT_NE(error_of("[grid]\nn_theta = 50\n").find("grid"), std::string::npos);
}

TEST(Config, LoadFromFileResolvesRelativePaths) {
  const fs::path dir = fs::temp_directory_path() / "plateau_flow_test_io";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "[curves]\nminus = m.txt\nplus = p.txt\n";
  }
  const io::RunConfig rc = io::load_config(dir / "run.cfg");
  EXPECT_EQ(rc.minus_file, (dir / "m.txt").lexically_normal().string());
  EXPECT_THROW(io::load_curves(rc), InputError);
  EXPECT_THROW(io::load_config(dir / "missing.cfg"), io::ConfigError);
  fs::remove_all(dir);
}

TEST(Curves, ParseAndWriteRoundTrip) {
  const Eigen::MatrixXd p = presets::ellipse_points(1.2, 0.8, 0.3, 0.1, -0.2, 16);
  std::ostringstream out;
  io::write_curve_points(out, p);
  std::istringstream in(out.str());
  EXPECT_EQ(io::read_curve_points(in), p);
}

TEST(Curves, ParseErrors) {
  EXPECT_NE(curve_error("n=3 period=pi\n").find("c.txt:1:"), std::string::npos);
  EXPECT_NE(curve_error("n=x period=2pi\n").find("c.txt:1:"), std::string::npos);
  EXPECT_NE(curve_error("# only a comment\n").find("missing header"), std::string::npos);
  EXPECT_NE(curve_error("n=2 period=2pi\n1 0\n0 1\n-1 0 5\n").find("c.txt:4: expected 2 values"), std::string::npos);
  EXPECT_NE(curve_error("n=2 period=2pi\n1 0\n0 one\n").find("c.txt:3: bad number 'one'"), std::string::npos);
  EXPECT_NE(curve_error("n=2 period=2pi\n1 0\n0 1\n-1 0\n").find("at least 4"), std::string::npos);
  EXPECT_NE(curve_error("n=2 period=2pi\n1 0\n0 1\n-1 0\n0 inf\n").find("bad number"), std::string::npos);
  EXPECT_THROW(io::read_curve_file("/nonexistent/curve.txt"), InputError);
}

TEST(Curves, SampleClosed) {
  const mesh::BoundaryCurve c(presets::find_curves("offset-circles").plus);
  const Eigen::MatrixXd s = io::sample_closed(c, 256);
  ASSERT_EQ(s.rows(), 257);
  EXPECT_EQ(s.row(0), s.row(256));
  EXPECT_NEAR(s(0, 0), 1.3, 1e-12);
}

TEST(Outputs, TrajectoryCsv) {
  const flow::FlowTrajectory t = short_run();
  std::ostringstream out;
  io::write_trajectory_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, io::kCsvVersion);
  std::getline(in, line);
  EXPECT_EQ(line, io::csv_header());
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  int rows = 0;
  while (std::getline(in, line) && line[0] != '#') {
    EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1, columns);
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(t.records.size()));
  EXPECT_EQ(line, std::string("# classification=") + flow::to_string(t.classification));
}

TEST(Outputs, Obj) {
  const mesh::Grid g(8, 12);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(g.node_count()), 3);
  std::ostringstream out;
  io::write_obj(out, g, u);
  std::istringstream in(out.str());
  std::string line;
  std::size_t v = 0, f = 0;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  EXPECT_EQ(v, g.node_count());
  EXPECT_EQ(f, g.triangle_count());
}

TEST(Outputs, FinalStateRoundTrip) {
  const flow::FlowTrajectory t = short_run();
  std::ostringstream out;
  io::write_final_state(out, t);
  std::istringstream in(out.str());
  const io::FinalState st = io::read_final_state(in);
  EXPECT_EQ(st.n_x, 8);
  EXPECT_EQ(st.n_theta, 12);
  EXPECT_EQ(st.params.packed(), t.final_params.packed());
  EXPECT_EQ(st.map.values, t.final_map.values);
  EXPECT_EQ(st.map.phi_minus, t.final_map.phi_minus);
  EXPECT_EQ(st.map.phi_plus, t.final_map.phi_plus);
  EXPECT_EQ(st.header.at("classification"), flow::to_string(t.classification));

  std::istringstream bad("# something else\n");
  EXPECT_THROW(io::read_final_state(bad), InputError);
  std::string text = out.str();
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  std::istringstream truncated(text);
  EXPECT_THROW(io::read_final_state(truncated), InputError);
}
