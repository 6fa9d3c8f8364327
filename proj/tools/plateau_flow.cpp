// plateau_flow: batch driver for the Teichmueller harmonic map flow.
//
//   plateau_flow run <config> | --preset <scenario> [--output DIR]
//   plateau_flow verify [--level quick|full]
//   plateau_flow curves list | show <name>
//
// Exit codes: 0 success, 2 solver failure, 64 usage or input error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "plateau_flow.hpp"

namespace fs = std::filesystem;
using namespace plateau_flow;

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitUsage = 64;

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  return out;
}

void write_outputs(const fs::path& dir, const flow::FlowTrajectory& traj) {
  {
    std::ofstream out = open_out(dir / "trajectory.csv");
    io::write_trajectory_csv(out, traj);
  }
  std::ofstream out = open_out(dir / "final_state.txt");
  io::write_final_state(out, traj);
}

void print_summary(const flow::FlowTrajectory& traj, double seconds) {
  const flow::FlowRecord& r = traj.records.back();
  std::printf("classification: %s\n", flow::to_string(traj.classification));
  std::printf("steps: %d  time: %.4g  wall: %.1f s\n", r.step, r.time, seconds);
  std::printf("energy: %.10g  area: %.10g  ell: %.6g\n", r.energy, r.area, r.params.ell);
  std::printf("|P Re Phi|: %.3g  |D_t u|: %.3g  |Re Phi|_L1/E: %.3g\n", r.projected_norm, r.dtu_norm,
              r.re_phi_l1 / r.energy);
  if (traj.classification == flow::Classification::DegenerateTwoDiscs) {
    const auto discs = flow::extract_discs(traj);
    const char* names[2] = {"C-", "C+"};
    for (int k = 0; k < 2; ++k)
      std::printf("disc %s: area %.6g  |Re Phi|_L1(|x|>=0.1) %.3g  conformality %.3g  lift +%.6g  monotone %s\n",
                  names[k], discs[k].area, discs[k].re_phi_l1, discs[k].conformality, discs[k].lift_increase,
                  discs[k].monotone ? "yes" : "no");
  }
}

int cmd_run(const std::string& config_path, const std::string& preset, const std::string& output, bool quiet) {
  io::RunConfig rc;
  if (!config_path.empty()) {
    rc = io::load_config(config_path);
  } else {
    std::istringstream in("scenario = " + preset + "\n");
    rc = io::parse_config(in, "--preset");
  }
  if (!output.empty()) rc.output_dir = output;
  const auto [minus, plus] = io::load_curves(rc);

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir / "meshes");
  {
    std::ofstream out = open_out(dir / "effective_config.txt");
    io::write_config(out, rc);
  }
  const mesh::Grid grid(rc.flow.n_x, rc.flow.n_theta);
  auto snapshot = [&](int step, const mesh::SurfaceMap& u) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d.obj", step);
    std::ofstream out = open_out(dir / "meshes" / name);
    io::write_obj(out, grid, u.values);
  };
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const flow::FlowTrajectory traj = flow::run(rc.flow, minus, plus, std::nullopt, snapshot);
    write_outputs(dir, traj);
    if (!quiet)
      print_summary(traj, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
  } catch (const flow::FlowFailure& f) {
    write_outputs(dir, f.partial);
    std::fprintf(stderr, "error: %s\nstate written to %s\n", f.what(), (dir / "final_state.txt").string().c_str());
    return kExitSolver;
  }
}

int cmd_verify(const std::string& level, bool corrupt) {
  verify::Options o;
  o.full = level == "full";
  o.corrupt_cutoff = corrupt;
  bool all = true;
  for (const verify::Suite& s : verify::run(o)) {
    std::printf("%s %-14s (%.2f s)\n", s.passed() ? "PASS" : "FAIL", s.name.c_str(), s.seconds);
    for (const verify::Check& c : s.checks)
      if (!c.pass) std::printf("     failed: %s  value %.3g  limit %.3g\n", c.name.c_str(), c.value, c.limit);
    all = all && s.passed();
  }
  return all ? 0 : 1;
}

int cmd_curves_list() {
  for (const presets::CurvePair& c : presets::curve_presets()) std::printf("%-16s %s\n", c.name.c_str(), c.description.c_str());
  std::printf("\nscenarios:\n");
  for (const presets::Scenario& s : presets::scenario_presets())
    std::printf("%-16s curves=%s T=%g h=%g grid=%dx%d\n", s.name.c_str(), s.curves.c_str(), s.config.T, s.config.h,
                s.config.n_x, s.config.n_theta);
  return 0;
}

int cmd_curves_show(const std::string& name, int samples) {
  const presets::CurvePair& c = presets::find_curves(name);
  for (int side = 0; side < 2; ++side) {
    const mesh::BoundaryCurve curve(side == 0 ? c.minus : c.plus);
    std::printf("# %s %s\n", name.c_str(), side == 0 ? "minus" : "plus");
    const Eigen::MatrixXd pts = io::sample_closed(curve, samples - 1);
    for (Eigen::Index k = 0; k < pts.rows(); ++k) {
      for (Eigen::Index d = 0; d < pts.cols(); ++d) std::printf(d ? " %.17g" : "%.17g", pts(k, d));
      std::printf("\n");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teichmueller harmonic map flow for cylinder-type Plateau problems"};
  app.require_subcommand(1);

  std::string config_path, preset, output;
  bool quiet = false;
  CLI::App* run = app.add_subcommand("run", "run the flow from a config file or a built-in scenario");
  run->add_option("config", config_path, "configuration file");
  run->add_option("--preset", preset, "built-in scenario (catenoid-0.8, goldschmidt-2.4)");
  run->add_option("-o,--output", output, "output directory (overrides output.dir)");
  run->add_flag("-q,--quiet", quiet, "no summary");

  std::string level = "quick";
  bool corrupt = false;
  CLI::App* ver = app.add_subcommand("verify", "run the self-check suites");
  ver->add_option("--level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  ver->add_flag("--corrupt-cutoff", corrupt)->group("");

  CLI::App* curves = app.add_subcommand("curves", "built-in boundary curves");
  curves->require_subcommand(1);
  curves->add_subcommand("list", "list curve presets and scenarios");
  std::string show_name;
  int samples = 256;
  CLI::App* show = curves->add_subcommand("show", "print sampled points of both curves");
  show->add_option("name", show_name, "preset name")->required();
  show->add_option("-n,--samples", samples, "points per curve, first repeated last")->check(CLI::Range(4, 1 << 20));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      if (config_path.empty() == preset.empty()) {
        std::fprintf(stderr, "error: give exactly one of <config> or --preset\n");
        return kExitUsage;
      }
      return cmd_run(config_path, preset, output, quiet);
    }
    if (*ver) return cmd_verify(level, corrupt);
    if (*show) return cmd_curves_show(show_name, samples);
    return cmd_curves_list();
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}
