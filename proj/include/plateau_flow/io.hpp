#pragma once
// Plain-text formats: curve files, OBJ meshes, trajectory CSV, final-state
// dumps and the key=value run configuration.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/error.hpp"
#include "plateau_flow/flow.hpp"
#include "plateau_flow/grid.hpp"
#include "plateau_flow/presets.hpp"
#include "plateau_flow/spline.hpp"

namespace plateau_flow::io {

namespace fs = std::filesystem;

inline constexpr const char* kCsvVersion = "# plateau-flow v1";
inline constexpr const char* kStateVersion = "# plateau-flow final-state v1";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long> parse_long(std::string_view s) {
  s = trim(s);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

}  // namespace detail

// ---------------------------------------------------------------------------
// curves

/// Reads control points: header "n=<dim> period=2pi", then one point per line.
inline Eigen::MatrixXd read_curve_points(std::istream& in, const std::string& source = "<curve>") {
  std::string line;
  int lineno = 0;
  int dim = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (dim == 0) {
      const auto tok = detail::split_ws(s);
      if (tok.size() != 2 || tok[0].substr(0, 2) != "n=" || tok[1] != "period=2pi")
        throw InputError(detail::where(source, lineno) + "expected header 'n=<dim> period=2pi'");
      const auto n = detail::parse_long(tok[0].substr(2));
      if (!n || *n < 1) throw InputError(detail::where(source, lineno) + "bad dimension in header");
      dim = static_cast<int>(*n);
      continue;
    }
    const auto tok = detail::split_ws(s);
    if (static_cast<int>(tok.size()) != dim)
      throw InputError(detail::where(source, lineno) + "expected " + std::to_string(dim) + " values, got " +
                       std::to_string(tok.size()));
    std::vector<double> row;
    for (auto t : tok) {
      const auto v = detail::parse_double(t);
      if (!v || !std::isfinite(*v)) throw InputError(detail::where(source, lineno) + "bad number '" + std::string(t) + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (dim == 0) throw InputError(source + ": missing header");
  if (rows.size() < 4) throw InputError(source + ": need at least 4 control points");
  Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int d = 0; d < dim; ++d) p(static_cast<Eigen::Index>(k), d) = rows[k][d];
  return p;
}

inline Eigen::MatrixXd read_curve_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open curve file '" + path.string() + "'");
  return read_curve_points(in, path.string());
}

inline void write_curve_points(std::ostream& out, const Eigen::MatrixXd& p) {
  out << "n=" << p.cols() << " period=2pi\n";
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    for (Eigen::Index d = 0; d < p.cols(); ++d) out << (d ? " " : "") << detail::fmt(p(k, d));
    out << '\n';
  }
}

/// n equally spaced samples of the closed curve, with the first point repeated at the end.
inline Eigen::MatrixXd sample_closed(const mesh::BoundaryCurve& c, int n = 256) {
  Eigen::MatrixXd s(n + 1, c.dim());
  for (int k = 0; k < n; ++k) s.row(k) = c(mesh::two_pi * k / n).transpose();
  s.row(n) = s.row(0);
  return s;
}

// ---------------------------------------------------------------------------
// meshes

/// OBJ with one vertex per node (first three coordinates, zero padded) and the grid triangles.
inline void write_obj(std::ostream& out, const mesh::Grid& grid, const Eigen::MatrixXd& values) {
  out << "# plateau-flow mesh " << grid.n_x() << "x" << grid.n_theta() << "\n";
  for (Eigen::Index v = 0; v < values.rows(); ++v) {
    out << "v";
    for (Eigen::Index d = 0; d < 3; ++d) out << ' ' << detail::fmt(d < values.cols() ? values(v, d) : 0.0);
    out << '\n';
  }
  for (const mesh::Triangle& t : grid.triangles()) out << "f " << t.v[0] + 1 << ' ' << t.v[1] + 1 << ' ' << t.v[2] + 1 << '\n';
}

// ---------------------------------------------------------------------------
// trajectory

inline const char* csv_header() {
  return "step,time,energy,area,ell,b_plus_re,b_plus_im,b_minus_re,b_minus_im,phi_minus,phi_plus,n_minus,n_plus,"
         "dtu_norm,dtg_norm,projected_norm,re_phi_l1,re_phi_l1_cell,weighted_I,stationarity,kkt_residual,"
         "dissipation,settling";
}

inline void write_trajectory_csv(std::ostream& out, const flow::FlowTrajectory& traj) {
  out << kCsvVersion << '\n' << csv_header() << '\n';
  for (const flow::FlowRecord& r : traj.records) {
    const auto& d = r.params.diffeo;
    const double cols[] = {r.time, r.energy, r.area, r.params.ell, d.b_plus.real(), d.b_plus.imag(),
                           d.b_minus.real(), d.b_minus.imag(), d.phi_minus, d.phi_plus};
    out << r.step;
    for (double c : cols) out << ',' << detail::fmt(c);
    out << ',' << r.winding[0] << ',' << r.winding[1];
    const double rest[] = {r.dtu_norm,     r.dtg_norm,   r.projected_norm, r.re_phi_l1, r.re_phi_l1_cell,
                           r.weighted_I,   r.stationarity, r.kkt_residual, r.dissipation};
    for (double c : rest) out << ',' << detail::fmt(c);
    out << ',' << (r.settling ? 1 : 0) << '\n';
  }
  out << "# classification=" << flow::to_string(traj.classification) << '\n';
}

/// Versioned dump of the final map and metric parameters.
inline void write_final_state(std::ostream& out, const flow::FlowTrajectory& traj) {
  const flow::FlowConfig& cfg = traj.config;
  const auto& p = traj.final_params;
  const auto& u = traj.final_map;
  const flow::FlowRecord* last = traj.records.empty() ? nullptr : &traj.records.back();
  out << kStateVersion << '\n';
  out << "classification = " << flow::to_string(traj.classification) << '\n';
  out << "steps = " << (last ? last->step : 0) << '\n';
  out << "time = " << detail::fmt(last ? last->time : 0.0) << '\n';
  if (last) {
    out << "energy = " << detail::fmt(last->energy) << '\n';
    out << "area = " << detail::fmt(last->area) << '\n';
  }
  out << "delta_gamma = " << detail::fmt(traj.delta_gamma) << '\n';
  out << "ell0 = " << detail::fmt(traj.ell0) << '\n';
  out << "eta = " << detail::fmt(cfg.eta) << '\n';
  out << "ell = " << detail::fmt(p.ell) << '\n';
  out << "b_plus = " << detail::fmt(p.diffeo.b_plus.real()) << ' ' << detail::fmt(p.diffeo.b_plus.imag()) << '\n';
  out << "b_minus = " << detail::fmt(p.diffeo.b_minus.real()) << ' ' << detail::fmt(p.diffeo.b_minus.imag()) << '\n';
  out << "phi_plus = " << detail::fmt(p.diffeo.phi_plus) << '\n';
  out << "phi_minus = " << detail::fmt(p.diffeo.phi_minus) << '\n';
  out << "n_x = " << cfg.n_x << '\n';
  out << "n_theta = " << cfg.n_theta << '\n';
  out << "dim = " << u.dim() << '\n';
  out << "[phi_minus]\n";
  for (double v : u.phi_minus) out << detail::fmt(v) << '\n';
  out << "[phi_plus]\n";
  for (double v : u.phi_plus) out << detail::fmt(v) << '\n';
  out << "[values]\n";
  for (Eigen::Index v = 0; v < u.values.rows(); ++v) {
    for (Eigen::Index d = 0; d < u.values.cols(); ++d) out << (d ? " " : "") << detail::fmt(u.values(v, d));
    out << '\n';
  }
}

struct FinalState {
  std::map<std::string, std::string> header;
  metric::MetricParams params;
  int n_x = 0;
  int n_theta = 0;
  mesh::SurfaceMap map;
};

inline FinalState read_final_state(std::istream& in, const std::string& source = "<state>") {
  FinalState st;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line) || detail::trim(line) != kStateVersion)
    throw InputError(source + ":1: not a plateau-flow final-state v1 file");
  ++lineno;
  std::string section;
  std::vector<std::vector<double>> rows;
  auto need = [&](const char* key) -> const std::string& {
    auto it = st.header.find(key);
    if (it == st.header.end()) throw InputError(source + ": missing key '" + key + "'");
    return it->second;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view s = detail::trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      section = std::string(s);
      continue;
    }
    if (section.empty()) {
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw InputError(detail::where(source, lineno) + "expected key = value");
      st.header[std::string(detail::trim(s.substr(0, eq)))] = std::string(detail::trim(s.substr(eq + 1)));
      continue;
    }
    std::vector<double> row;
    for (auto t : detail::split_ws(s)) {
      const auto v = detail::parse_double(t);
      if (!v) throw InputError(detail::where(source, lineno) + "bad number");
      row.push_back(*v);
    }
    if (section == "[phi_minus]") st.map.phi_minus.push_back(row.at(0));
    else if (section == "[phi_plus]") st.map.phi_plus.push_back(row.at(0));
    else if (section == "[values]") rows.push_back(std::move(row));
    else throw InputError(detail::where(source, lineno) + "unknown section " + section);
  }
  auto num = [&](const char* key) {
    const auto v = detail::parse_double(need(key));
    if (!v) throw InputError(source + ": bad value for '" + key + "'");
    return *v;
  };
  auto pair_of = [&](const char* key) {
    const auto tok = detail::split_ws(need(key));
    if (tok.size() != 2) throw InputError(source + ": bad value for '" + key + "'");
    return std::complex<double>(detail::parse_double(tok[0]).value(), detail::parse_double(tok[1]).value());
  };
  st.params.ell = num("ell");
  st.params.diffeo.b_plus = pair_of("b_plus");
  st.params.diffeo.b_minus = pair_of("b_minus");
  st.params.diffeo.phi_plus = num("phi_plus");
  st.params.diffeo.phi_minus = num("phi_minus");
  st.n_x = static_cast<int>(num("n_x"));
  st.n_theta = static_cast<int>(num("n_theta"));
  const int dim = static_cast<int>(num("dim"));
  const std::size_t nodes = static_cast<std::size_t>(st.n_x + 1) * st.n_theta;
  if (rows.size() != nodes || st.map.phi_minus.size() != static_cast<std::size_t>(st.n_theta) ||
      st.map.phi_plus.size() != static_cast<std::size_t>(st.n_theta))
    throw InputError(source + ": section sizes do not match the grid");
  st.map.values.resize(static_cast<Eigen::Index>(nodes), dim);
  for (std::size_t v = 0; v < nodes; ++v) {
    if (rows[v].size() != static_cast<std::size_t>(dim)) throw InputError(source + ": bad row width in [values]");
    for (int d = 0; d < dim; ++d) st.map.values(static_cast<Eigen::Index>(v), d) = rows[v][d];
  }
  return st;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  flow::FlowConfig flow;
  std::string curve_preset = "circles";  ///< used unless both curve files are given
  std::string minus_file;
  std::string plus_file;
  std::string output_dir = "out";
};

/// Malformed configuration; reported with exit code 64.
struct ConfigError : InputError {
  using InputError::InputError;
};

namespace detail {

inline bool parse_bool(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return out = true, true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return out = false, true;
  return false;
}

inline void apply_key(RunConfig& rc, const std::string& key, const std::string& value, const fs::path& base,
                      const std::string& at) {
  flow::FlowConfig& f = rc.flow;
  auto bad = [&]() { return ConfigError(at + "bad value '" + value + "' for key '" + key + "'"); };
  auto real = [&](double& dst) {
    const auto v = parse_double(value);
    if (!v || !std::isfinite(*v)) throw bad();
    dst = *v;
  };
  auto integer = [&](int& dst) {
    const auto v = parse_long(value);
    if (!v || *v < -2147483647L || *v > 2147483647L) throw bad();
    dst = static_cast<int>(*v);
  };
  auto boolean = [&](bool& dst) {
    if (!parse_bool(value, dst)) throw bad();
  };
  auto path = [&](std::string& dst) {
    if (value.empty()) throw bad();
    fs::path p(value);
    if (p.is_relative()) p = base / p;
    dst = p.lexically_normal().string();
  };
  if (key == "grid.n_x") integer(f.n_x);
  else if (key == "grid.n_theta") integer(f.n_theta);
  else if (key == "time.h") real(f.h);
  else if (key == "time.T") real(f.T);
  else if (key == "time.n_sub") integer(f.n_sub);
  else if (key == "metric.eta") real(f.eta);
  else if (key == "metric.ell_init") real(f.ell_init);
  else if (key == "solver.linear") {
    if (value == "cholesky") f.solver = plateau::LinearSolver::Cholesky;
    else if (value == "pcg") f.solver = plateau::LinearSolver::PCG;
    else throw bad();
  } else if (key == "solver.tol_lin") real(f.tol_lin);
  else if (key == "solver.tol_kkt") real(f.tol_kkt);
  else if (key == "solver.inner_max") integer(f.inner_max);
  else if (key == "solver.inner_rel_tol") real(f.inner_rel_tol);
  else if (key == "solver.clamp") boolean(f.clamp);
  else if (key == "stop.eps_stat") real(f.eps_stat);
  else if (key == "stop.eps_map") real(f.eps_map);
  else if (key == "stop.ell_floor") real(f.ell_floor);
  else if (key == "stop.b_ceiling") real(f.b_ceiling);
  else if (key == "stop.stop_on_stationary") boolean(f.stop_on_stationary);
  else if (key == "stop.settle_max_steps") integer(f.settle_max_steps);
  else if (key == "curves.preset") {
    try {
      (void)presets::find_curves(value);
    } catch (const ParameterError&) {
      throw ConfigError(at + "unknown curve preset '" + value + "'");
    }
    rc.curve_preset = value;
  } else if (key == "curves.minus") path(rc.minus_file);
  else if (key == "curves.plus") path(rc.plus_file);
  else if (key == "output.dir") rc.output_dir = value;
  else if (key == "output.mesh_stride") integer(f.mesh_stride);
  else if (key == "output.diag_stride") integer(f.diag_stride);
  else throw ConfigError(at + "unknown key '" + key + "'");
}

}  // namespace detail

/// Parses the configuration text. A top-level "scenario = <name>" seeds all
/// values from a built-in scenario before the remaining keys are applied,
/// wherever it appears. Relative curve paths resolve against base.
inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>", const fs::path& base = ".") {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string line, section;
  int lineno = 0;
  std::optional<std::string> scenario;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const std::string at = detail::where(source, lineno);
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(at + "malformed section header");
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at + "expected key = value");
    const std::string k(detail::trim(s.substr(0, eq)));
    const std::string v(detail::trim(s.substr(eq + 1)));
    if (k.empty()) throw ConfigError(at + "empty key");
    const std::string full = section.empty() ? k : section + "." + k;
    if (seen.count(full)) throw ConfigError(at + "duplicate key '" + full + "'");
    seen[full] = lineno;
    if (full == "scenario") {
      scenario = v;
      try {
        (void)presets::find_scenario(v);
      } catch (const ParameterError&) {
        throw ConfigError(at + "unknown scenario '" + v + "'");
      }
      continue;
    }
    entries.push_back({full, v, lineno});
  }
  RunConfig rc;
  if (scenario) {
    const presets::Scenario& sc = presets::find_scenario(*scenario);
    rc.flow = sc.config;
    rc.curve_preset = sc.curves;
  }
  for (const Entry& e : entries) detail::apply_key(rc, e.key, e.value, base, detail::where(source, e.line));
  if (rc.minus_file.empty() != rc.plus_file.empty())
    throw ConfigError(source + ": curves.minus and curves.plus must be given together");
  try {
    rc.flow.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return rc;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

/// Every key with its effective value; parsing this text reproduces the configuration.
inline void write_config(std::ostream& out, const RunConfig& rc) {
  const flow::FlowConfig& f = rc.flow;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[curves]\n";
  if (rc.minus_file.empty()) out << "preset = " << rc.curve_preset << '\n';
  else out << "minus = " << rc.minus_file << "\nplus = " << rc.plus_file << '\n';
  out << "\n[grid]\nn_x = " << f.n_x << "\nn_theta = " << f.n_theta << '\n';
  out << "\n[time]\nh = " << detail::fmt(f.h) << "\nT = " << detail::fmt(f.T) << "\nn_sub = " << f.n_sub << '\n';
  out << "\n[metric]\neta = " << detail::fmt(f.eta) << "\nell_init = " << detail::fmt(f.ell_init) << '\n';
  out << "\n[solver]\nlinear = " << (f.solver == plateau::LinearSolver::PCG ? "pcg" : "cholesky")
      << "\ntol_lin = " << detail::fmt(f.tol_lin) << "\ntol_kkt = " << detail::fmt(f.tol_kkt)
      << "\ninner_max = " << f.inner_max << "\ninner_rel_tol = " << detail::fmt(f.inner_rel_tol)
      << "\nclamp = " << b(f.clamp) << '\n';
  out << "\n[stop]\neps_stat = " << detail::fmt(f.eps_stat) << "\neps_map = " << detail::fmt(f.eps_map)
      << "\nell_floor = " << detail::fmt(f.ell_floor) << "\nb_ceiling = " << detail::fmt(f.b_ceiling)
      << "\nstop_on_stationary = " << b(f.stop_on_stationary) << "\nsettle_max_steps = " << f.settle_max_steps << '\n';
  out << "\n[output]\ndir = " << rc.output_dir << "\nmesh_stride = " << f.mesh_stride
      << "\ndiag_stride = " << f.diag_stride << '\n';
}

/// Boundary curves named by the configuration.
inline std::pair<mesh::BoundaryCurve, mesh::BoundaryCurve> load_curves(const RunConfig& rc) {
  if (!rc.minus_file.empty()) {
    Eigen::MatrixXd m = read_curve_file(rc.minus_file), p = read_curve_file(rc.plus_file);
    if (m.cols() != p.cols()) throw InputError("curve files have different dimensions");
    return {mesh::BoundaryCurve(std::move(m)), mesh::BoundaryCurve(std::move(p))};
  }
  const presets::CurvePair& c = presets::find_curves(rc.curve_preset);
  return {mesh::BoundaryCurve(c.minus), mesh::BoundaryCurve(c.plus)};
}

}  // namespace plateau_flow::io
