#pragma once
// Outer time-discretisation loop: metric ODE over (t_j, t_j + h] with the map
// frozen, then one minimisation of F^h with the new metric; diagnostics and
// asymptotic classification.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/collar.hpp"
#include "plateau_flow/dirichlet.hpp"
#include "plateau_flow/error.hpp"
#include "plateau_flow/hopf.hpp"
#include "plateau_flow/metric.hpp"
#include "plateau_flow/moebius.hpp"
#include "plateau_flow/plateau.hpp"
#include "plateau_flow/spline.hpp"

namespace plateau_flow::flow {

using mesh::BoundaryCurve;
using mesh::Grid;
using mesh::SurfaceMap;
using metric::MetricParams;
using metric::MetricState;

enum class Classification { ConvergedCylinder, DegenerateTwoDiscs, ThreePointDegenerate, MaxTime };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::ConvergedCylinder: return "ConvergedCylinder";
    case Classification::DegenerateTwoDiscs: return "DegenerateTwoDiscs";
    case Classification::ThreePointDegenerate: return "ThreePointDegenerate";
    case Classification::MaxTime: return "MaxTime";
  }
  return "?";
}

struct FlowConfig {
  int n_x = 64;
  int n_theta = 48;
  double h = 1e-2;
  double T = 20.0;
  double eta = 1.0;
  double ell_init = 0.0;  ///< 0 selects l0
  int n_sub = 4;
  double tol_lin = 1e-10;
  double tol_kkt = 1e-6;
  double eps_stat = 1e-3;  ///< on ||P^V Re Phi||_{L^2}
  double eps_map = 1e-3;   ///< on ||D_t u||_{L^2}
  double ell_floor = 1e-6;
  double b_ceiling = 0.995;
  bool clamp = false;
  bool stop_on_stationary = true;
  int inner_max = 200;
  double inner_rel_tol = 1e-11;
  plateau::LinearSolver solver = plateau::LinearSolver::Cholesky;
  int settle_max_steps = 4000;
  int mesh_stride = 0;  ///< OBJ snapshot stride in steps (0 = final only)
  int diag_stride = 10;  ///< full diagnostics every k steps and at the last step

  void validate() const {
    if (n_x < 8 || n_theta < 12 || n_theta % 3 != 0) throw ParameterError("flow: bad grid size");
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("flow: h must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw ParameterError("flow: T must be nonnegative");
    if (!(eta > 0.0)) throw ParameterError("flow: eta must be positive");
    if (!(ell_init >= 0.0)) throw ParameterError("flow: ell_init must be nonnegative");
    if (n_sub < 1) throw ParameterError("flow: n_sub must be >= 1");
    if (!(eps_stat > 0.0) || !(eps_map > 0.0) || !(tol_lin > 0.0) || !(tol_kkt > 0.0))
      throw ParameterError("flow: thresholds must be positive");
    if (!(ell_floor > 0.0)) throw ParameterError("flow: ell_floor must be positive");
    if (!(b_ceiling > 0.0 && b_ceiling < 1.0)) throw ParameterError("flow: b_ceiling must lie in (0,1)");
    if (inner_max < 1 || settle_max_steps < 0 || mesh_stride < 0 || diag_stride < 1) throw ParameterError("flow: bad iteration limits");
  }
};

struct FlowRecord {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  double area = 0.0;
  MetricParams params;
  std::array<long, 2> winding{};  ///< n-, n+ = floor(phi / 2 pi)
  double dtu_norm = std::numeric_limits<double>::quiet_NaN();
  double dtg_norm = 0.0;
  double projected_norm = 0.0;
  // NaN on steps without full diagnostics
  double re_phi_l1 = 0.0;       ///< quad-centred recovery
  double re_phi_l1_cell = 0.0;  ///< per-triangle P1 field
  double weighted_I = 0.0;
  double stationarity = 0.0;
  double kkt_residual = 0.0;
  bool full = true;
  double dissipation = 0.0;  ///< cumulative sum of [1/2 ||D_t u||^2 h + metric dissipation]
  bool settling = false;     ///< metric frozen after l reached the floor
};

struct FlowTrajectory {
  FlowConfig config;
  std::vector<FlowRecord> records;
  Classification classification = Classification::MaxTime;
  SurfaceMap final_map;
  MetricParams final_params;
  double delta_gamma = 0.0;
  double ell0 = 0.0;
  bool hit_floor = false;
  bool hit_ceiling = false;
};

/// Twelve vector fields vanishing at the anchors (+-1, 2 pi k / 3). Returns (X^x, X^theta).
inline std::array<double, 2> probe_field(int k, double x, double th) {
  const double w = 1.0 - x * x;
  switch (k) {
    case 0: return {w, 0.0};
    case 1: return {w * std::cos(th), 0.0};
    case 2: return {w * std::sin(th), 0.0};
    case 3: return {w * x, 0.0};
    case 4: return {w * x * std::cos(th), 0.0};
    case 5: return {w * x * std::sin(th), 0.0};
    case 6: return {0.0, w};
    case 7: return {0.0, w * std::cos(th)};
    case 8: return {0.0, w * std::sin(th)};
    case 9: return {0.0, w * x};
    case 10: return {0.0, std::sin(3.0 * th)};
    case 11: return {0.0, x * std::sin(3.0 * th)};
    default: throw ParameterError("probe_field: index out of range");
  }
}
inline constexpr int kProbeCount = 12;

/// Per probe X: 1/4 <Re Phi, L_X g> - sum_v Du(X)_v . (S u)_v.
inline std::array<double, kProbeCount> stationarity_terms(const MetricState& s, const mesh::Operators& op,
                                                          const Eigen::MatrixXd& u) {
  const Grid& grid = s.grid();
  const auto& tris = grid.triangles();
  const mesh::TensorField re_phi = mesh::re_phi_tensor(s, u);
  const double eps = 1e-6;
  auto gp = [&](double x, double th) {
    return metric::point_metric(s.chart(), s.params().diffeo, s.cutoffs(), x, th);
  };
  std::array<double, kProbeCount> out{};
  std::vector<std::array<double, kProbeCount>> part(tris.size());
  parallel_for(tris.size(), [&](std::size_t t) {
    const double x = tris[t].xc, th = tris[t].tc;
    const mesh::Sym2 g = s.cells()[t].g;
    const mesh::Sym2 gx = (gp(x + eps, th) - gp(x - eps, th)) * (0.5 / eps);
    const mesh::Sym2 gt = (gp(x, th + eps) - gp(x, th - eps)) * (0.5 / eps);
    for (int k = 0; k < kProbeCount; ++k) {
      const auto X = probe_field(k, x, th);
      const auto Xxp = probe_field(k, x + eps, th), Xxm = probe_field(k, x - eps, th);
      const auto Xtp = probe_field(k, x, th + eps), Xtm = probe_field(k, x, th - eps);
      // dX^a/dx^b
      const double ax_x = (Xxp[0] - Xxm[0]) / (2 * eps), ax_t = (Xtp[0] - Xtm[0]) / (2 * eps);
      const double at_x = (Xxp[1] - Xxm[1]) / (2 * eps), at_t = (Xtp[1] - Xtm[1]) / (2 * eps);
      mesh::Sym2 L = gx * X[0] + gt * X[1];
      L.xx += 2.0 * (g.xx * ax_x + g.xt * at_x);
      L.tt += 2.0 * (g.xt * ax_t + g.tt * at_t);
      L.xt += g.xx * ax_t + g.xt * at_t + g.xt * ax_x + g.tt * at_x;
      part[t][k] = 0.25 * s.cells()[t].weight * mesh::pair(s.cells()[t].ginv, re_phi[t], L);
    }
  });
  for (const auto& p : part)
    for (int k = 0; k < kProbeCount; ++k) out[k] += p[k];

  const Eigen::MatrixXd su = op.stiffness * u;
  const int nt = grid.n_theta();
  const double ix = 0.5 / grid.dx(), it = 0.5 / grid.dtheta();
  for (int i = 0; i <= grid.n_x(); ++i) {
    const double x = grid.x(i);
    for (int j = 0; j < nt; ++j) {
      const auto v = static_cast<Eigen::Index>(grid.node(i, j));
      const Eigen::RowVectorXd ut =
          (u.row(static_cast<Eigen::Index>(grid.node(i, j + 1))) - u.row(static_cast<Eigen::Index>(grid.node(i, j - 1)))) * it;
      Eigen::RowVectorXd ux = Eigen::RowVectorXd::Zero(u.cols());
      if (i > 0 && i < grid.n_x())
        ux = (u.row(static_cast<Eigen::Index>(grid.node(i + 1, j))) - u.row(static_cast<Eigen::Index>(grid.node(i - 1, j)))) * ix;
      const double sut = ut.dot(su.row(v)), sux = ux.dot(su.row(v));
      for (int k = 0; k < kProbeCount; ++k) {
        const auto X = probe_field(k, x, grid.theta(j));
        out[k] -= X[0] * sux + X[1] * sut;
      }
    }
  }
  return out;
}

/// max_X |R_X| / E.
inline double stationarity_residual(const MetricState& s, const mesh::Operators& op, const Eigen::MatrixXd& u) {
  const double e = mesh::energy(s, u);
  if (!(e > 0.0)) return 0.0;
  double r = 0.0;
  for (double v : stationarity_terms(s, op, u)) r = std::max(r, std::abs(v));
  return r / e;
}

inline std::array<long, 2> winding_numbers(const MetricParams& p) {
  const double tp = 2.0 * std::numbers::pi;
  auto wind = [tp](double phi) {
    double n = std::floor(phi / tp);
    // phi just below a multiple of 2 pi would leave a remainder that rounds up to 2 pi
    if (phi - tp * n >= tp) n += 1.0;
    return static_cast<long>(n);
  };
  return {wind(p.diffeo.phi_minus), wind(p.diffeo.phi_plus)};
}

/// Classification rule applied to a finished trajectory.
inline Classification classify(const FlowTrajectory& traj, const FlowConfig& cfg) {
  if (traj.records.empty()) throw ParameterError("classify: empty trajectory");
  bool floor_hit = traj.hit_floor, ceiling_hit = traj.hit_ceiling;
  for (const FlowRecord& r : traj.records) {
    if (!(r.params.ell > cfg.ell_floor * (1.0 + 1e-12))) floor_hit = true;
    if (std::abs(r.params.diffeo.b_plus) >= cfg.b_ceiling || std::abs(r.params.diffeo.b_minus) >= cfg.b_ceiling)
      ceiling_hit = true;
  }
  const FlowRecord& last = traj.records.back();
  if (floor_hit) return last.dtu_norm < cfg.eps_map ? Classification::DegenerateTwoDiscs : Classification::MaxTime;
  if (ceiling_hit) return Classification::ThreePointDegenerate;
  if (last.projected_norm < cfg.eps_stat && last.dtu_norm < cfg.eps_map) return Classification::ConvergedCylinder;
  return Classification::MaxTime;
}

struct Diagnostics {
  double energy = 0.0;
  double area = 0.0;
  hopf::Projection projection;
  double re_phi_l1 = 0.0;
  double re_phi_l1_cell = 0.0;
  double weighted_I = 0.0;
  double stationarity = 0.0;
};

inline Diagnostics diagnose(const MetricState& s, const mesh::Operators& op, const Eigen::MatrixXd& u,
                            bool full = true) {
  Diagnostics d;
  d.energy = mesh::energy(s, u);
  d.area = mesh::area(s.grid(), u);
  const mesh::TensorField re_phi = mesh::re_phi_tensor(s, u);
  d.projection = hopf::project_hopf(re_phi, s);
  if (!full) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    d.re_phi_l1 = d.re_phi_l1_cell = d.weighted_I = d.stationarity = nan;
    return d;
  }
  d.re_phi_l1 = mesh::re_phi_l1_recovered(s, u);
  d.re_phi_l1_cell = mesh::re_phi_l1(s, re_phi);
  d.weighted_I = hopf::weighted_energy_I(s, u);
  d.stationarity = stationarity_residual(s, op, u);
  return d;
}

using SnapshotFn = std::function<void(int step, const SurfaceMap&)>;

/// A module failure inside the loop; carries the records so far and the map
/// and parameters current when it happened.
struct FlowFailure : NumericalError {
  FlowFailure(const std::string& what, int step_, FlowTrajectory partial_)
      : NumericalError(what), step(step_), partial(std::move(partial_)) {}
  int step;
  FlowTrajectory partial;
};

inline FlowTrajectory run(const FlowConfig& cfg, const BoundaryCurve& minus, const BoundaryCurve& plus,
                          const std::optional<SurfaceMap>& u0 = std::nullopt, const SnapshotFn& snapshot = {}) {
  cfg.validate();
  if (minus.dim() != plus.dim()) throw ParameterError("flow: curve dimensions differ");
  const Grid grid(cfg.n_x, cfg.n_theta);
  const collar::CollarFamily family(cfg.eta);
  const moebius::CutoffPair cut{};
  FlowTrajectory traj;
  traj.config = cfg;
  traj.ell0 = family.ell0();
  traj.delta_gamma = mesh::delta_gamma(minus, plus);

  SurfaceMap u = u0 ? *u0 : mesh::initial_map(grid, minus, plus);
  if (u.values.rows() != static_cast<Eigen::Index>(grid.node_count()) || u.dim() != minus.dim())
    throw ParameterError("flow: initial map does not match the grid");
  MetricParams params{cfg.ell_init > 0.0 ? cfg.ell_init : family.ell0(), {}};

  plateau::StepOptions sopt;
  sopt.max_inner = cfg.inner_max;
  sopt.rel_tol = cfg.inner_rel_tol;
  sopt.tol_lin = cfg.tol_lin;
  sopt.tol_kkt = cfg.tol_kkt;
  sopt.clamp = cfg.clamp;
  sopt.solver = cfg.solver;
  hopf::OdeOptions oopt;
  oopt.n_sub = cfg.n_sub;
  oopt.ell_floor = cfg.ell_floor;
  oopt.b_ceiling = cfg.b_ceiling;

  double kkt = 0.0;
  auto record = [&](int step, double time, const MetricState& s, const mesh::Operators& op, double dtu, double cum,
                    bool settling, bool full) {
    const Diagnostics d = diagnose(s, op, u.values, full);
    FlowRecord r;
    r.step = step;
    r.time = time;
    r.energy = d.energy;
    r.area = d.area;
    r.params = s.params();
    r.winding = winding_numbers(s.params());
    r.dtu_norm = dtu;
    r.dtg_norm = d.projection.dtg_norm;
    r.projected_norm = d.projection.projected_norm;
    r.re_phi_l1 = d.re_phi_l1;
    r.re_phi_l1_cell = d.re_phi_l1_cell;
    r.weighted_I = d.weighted_I;
    r.stationarity = d.stationarity;
    r.dissipation = cum;
    r.settling = settling;
    r.full = full;
    r.kkt_residual = kkt;
    traj.records.push_back(r);
    return r;
  };

  {
    const MetricState s(grid, family, params, cut);
    record(0, 0.0, s, mesh::assemble_operators(s), std::numeric_limits<double>::quiet_NaN(), 0.0, false, true);
  }
  if (snapshot) snapshot(0, u);

  const long max_steps = static_cast<long>(std::floor(cfg.T / cfg.h + 1e-9));
  const double inv_h = 1.0 / cfg.h;
  double cum = 0.0;
  bool settle = false;
  int step = 0;
  int settle_steps = 0;
  std::optional<MetricState> cur;
  std::optional<mesh::Operators> cur_op;
  for (long k = 0; k < max_steps || settle; ++k) {
    const int attempt = step + 1;
    try {
      double metric_diss = 0.0;
      if (!settle) {
        hopf::OdeResult ode = hopf::ode_step(grid, family, params, cut, u.values, cfg.h, oopt, cur ? &*cur : nullptr);
        params = ode.params;
        if (ode.state) cur = std::move(ode.state);
        else cur.reset();
        cur_op.reset();
        metric_diss = ode.dissipation;
        if (ode.event == hopf::MetricEvent::EllFloor) {
          traj.hit_floor = true;
          settle = true;
        } else if (ode.event == hopf::MetricEvent::BCeiling) {
          traj.hit_ceiling = true;
        }
      } else {
        ++settle_steps;
      }
      if (!cur) cur.emplace(grid, family, params, cut);
      if (!cur_op) cur_op = mesh::assemble_operators(*cur);
      const MetricState& s = *cur;
      const mesh::Operators& op = *cur_op;
      plateau::StepResult sr = plateau::minimize_step(grid, op, minus, plus, u, inv_h, sopt);
      u = std::move(sr.w);
      kkt = sr.kkt_residual;
      ++step;
      const double dtu = std::sqrt(sr.dist_sq) * inv_h;
      cum += 0.5 * sr.dist_sq * inv_h + metric_diss;
      const bool last_planned = !settle && k + 1 >= max_steps;
      FlowRecord r = record(step, step * cfg.h, s, op, dtu, cum, settle, step % cfg.diag_stride == 0 || last_planned);
      if (snapshot && cfg.mesh_stride > 0 && step % cfg.mesh_stride == 0) snapshot(step, u);
      bool stop = traj.hit_ceiling;
      if (settle) stop = stop || dtu < cfg.eps_map || settle_steps >= cfg.settle_max_steps;
      else stop = stop || (cfg.stop_on_stationary && r.projected_norm < cfg.eps_stat && dtu < cfg.eps_map);
      if (stop || last_planned) {
        if (!r.full) {
          traj.records.pop_back();
          record(step, step * cfg.h, s, op, dtu, cum, settle, true);
        }
        if (stop) break;
      }
    } catch (const FlowFailure&) {
      throw;
    } catch (const std::exception& e) {
      traj.final_map = u;
      traj.final_params = params;
      throw FlowFailure("flow: step " + std::to_string(attempt) + ": " + e.what(), attempt, std::move(traj));
    }
  }
  traj.final_map = u;
  traj.final_params = params;
  traj.classification = step == 0 ? Classification::MaxTime : classify(traj, cfg);
  if (snapshot && !(cfg.mesh_stride > 0 && step % cfg.mesh_stride == 0)) snapshot(step, u);
  return traj;
}

struct DiscReport {
  double area = 0.0;
  double re_phi_l1 = 0.0;          ///< on the half, restricted to |x| >= 0.1
  double conformality = 0.0;       ///< re_phi_l1 / energy of the same region
  double lift_increase = 0.0;      ///< phi(theta + 2 pi) - phi(theta)
  bool monotone = false;
};

/// Splits a degenerate final state at x = 0 into C- (index 0) and C+ (index 1).
inline std::array<DiscReport, 2> extract_discs(const FlowTrajectory& traj) {
  if (traj.classification != Classification::DegenerateTwoDiscs)
    throw UsageError("extract_discs: trajectory did not degenerate into two discs");
  const FlowConfig& cfg = traj.config;
  const Grid grid(cfg.n_x, cfg.n_theta);
  const collar::CollarFamily family(cfg.eta);
  const MetricState s(grid, family, traj.final_params);
  const Eigen::MatrixXd& u = traj.final_map.values;
  std::array<DiscReport, 2> out;
  for (int side = 0; side < 2; ++side) {
    const double sg = side == 0 ? -1.0 : 1.0;
    DiscReport& d = out[side];
    d.area = mesh::area_where(grid, u, [sg](double x) { return sg * x > 0.0; });
    d.re_phi_l1 = mesh::re_phi_l1_recovered(s, u, [sg](double x) { return sg * x >= 0.1; });
    double e = 0.0;
    for (std::size_t t = 0; t < grid.triangles().size(); ++t) {
      if (!(sg * grid.triangles()[t].xc >= 0.1)) continue;
      const metric::Cell& c = s.cells()[t];
      const mesh::Sym2 p = mesh::triangle_pullback(grid.triangles()[t], u);
      e += 0.5 * c.weight * (c.ginv.xx * p.xx + 2.0 * c.ginv.xt * p.xt + c.ginv.tt * p.tt);
    }
    d.conformality = e > 0.0 ? d.re_phi_l1 / e : 0.0;
    const std::vector<double>& phi = side == 0 ? traj.final_map.phi_minus : traj.final_map.phi_plus;
    d.monotone = true;
    for (std::size_t j = 1; j < phi.size(); ++j)
      if (phi[j] < phi[j - 1]) d.monotone = false;
    if (phi.back() > phi.front() + 2.0 * std::numbers::pi) d.monotone = false;
    d.lift_increase = (phi.front() + 2.0 * std::numbers::pi) - phi.front();
  }
  return out;
}

}  // namespace plateau_flow::flow
