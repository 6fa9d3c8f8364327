#pragma once
// Metric side of the flow: d/dt g = 1/4 P^V(Re Phi) within the seven-parameter
// family, integrated with explicit midpoint substeps while the map is frozen.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/collar.hpp"
#include "plateau_flow/dirichlet.hpp"
#include "plateau_flow/error.hpp"
#include "plateau_flow/metric.hpp"

namespace plateau_flow::hopf {

using metric::MetricParams;
using metric::MetricState;
using metric::ParamVector;
using mesh::TensorField;

struct Projection {
  ParamVector coeffs = ParamVector::Zero();  ///< d/dt p, so that d/dt g = sum c_i T_i
  ParamVector rhs = ParamVector::Zero();     ///< <Re Phi, T_j>
  double dtg_norm = 0.0;                     ///< ||d/dt g||_{L^2(g)}
  double projected_norm = 0.0;               ///< ||P^V Re Phi|| = 4 ||d/dt g||
  double condition = 0.0;                    ///< of the equilibrated Gram matrix
};

inline double max_condition = 1e12;

/// Solves Gram c = 1/4 <Re Phi, T_j> after diagonal equilibration.
inline Projection project_hopf(const TensorField& re_phi, const MetricState& s) {
  if (!s.has_tangents()) throw UsageError("project_hopf: state built without tangent tensors");
  Projection p;
  for (int j = 0; j < metric::kParamCount; ++j) p.rhs(j) = s.inner(re_phi, s.tangent(j));
  const metric::Gram& G = s.gram();
  ParamVector d;
  for (int j = 0; j < metric::kParamCount; ++j) {
    if (!(G(j, j) > 0.0)) throw NumericalError("project_hopf: degenerate tangent basis (zero tensor)");
    d(j) = 1.0 / std::sqrt(G(j, j));
  }
  const metric::Gram Ge = d.asDiagonal() * G * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<metric::Gram> eig(Ge, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  p.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(p.condition <= max_condition)) throw NumericalError("project_hopf: Gram matrix is ill-conditioned");
  const ParamVector y = Ge.ldlt().solve(0.25 * d.cwiseProduct(p.rhs));
  p.coeffs = d.cwiseProduct(y);
  const double q = p.coeffs.dot(G * p.coeffs);
  p.dtg_norm = std::sqrt(std::max(0.0, q));
  p.projected_norm = 4.0 * p.dtg_norm;
  return p;
}

/// Velocity of the parameters for the frozen map u.
inline Projection metric_velocity(const MetricState& s, const Eigen::MatrixXd& u) {
  return project_hopf(mesh::re_phi_tensor(s, u), s);
}

/// dl/dt = -(2 pi^2 / l) a0 with a0 = 1/4 <Phi, dz^2> / ||dz^2||^2, computed in
/// collar coordinates from phi1.
inline double dl_dt_closed_form(const mesh::HopfField& hf, const MetricState& s) {
  const auto& cells = s.cells();
  const double area = s.grid().triangle_area();
  double acc = 0.0;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const metric::Cell& c = cells[t];
    acc += 4.0 * hf.phi1[t] / (c.rho * c.rho) * c.ds_dx * c.theta_t * area;
  }
  const double ell = s.params().ell;
  const double norm = collar::dz2_norms(s.family().eta(), ell).l2_norm_sq;
  const double a0 = 0.25 * acc / norm;
  return -(2.0 * std::numbers::pi * std::numbers::pi / ell) * a0;
}

enum class MetricEvent { None, EllFloor, BCeiling };

struct OdeOptions {
  int n_sub = 4;
  double ell_floor = 1e-6;
  double b_ceiling = 0.995;
  bool energy_guard = true;
};

struct OdeResult {
  MetricParams params;
  MetricEvent event = MetricEvent::None;
  double dissipation = 0.0;  ///< sum dt ||d/dt g||^2 over accepted substeps
  int substeps = 0;
  std::optional<MetricState> state;  ///< state at the returned parameters
};

inline bool hits_floor(const ParamVector& p, const OdeOptions& o) { return !(p(0) > o.ell_floor); }
inline bool hits_ceiling(const ParamVector& p, const OdeOptions& o) {
  return std::hypot(p(1), p(2)) >= o.b_ceiling || std::hypot(p(3), p(4)) >= o.b_ceiling;
}

/// Advances the parameters over [0, dt] with the map frozen.
inline OdeResult ode_step(const mesh::Grid& grid, const collar::CollarFamily& family, const MetricParams& start,
                          const moebius::CutoffPair& cut, const Eigen::MatrixXd& u, double dt,
                          const OdeOptions& opts = {}, const MetricState* start_state = nullptr) {
  if (!(dt >= 0.0)) throw ParameterError("ode_step: dt must be nonnegative");
  if (opts.n_sub < 1) throw ParameterError("ode_step: n_sub must be >= 1");
  OdeResult res;
  res.params = start;
  if (dt == 0.0) return res;
  ParamVector p = start.packed();
  double remaining = dt;
  double sub = dt / opts.n_sub;
  const double min_sub = 1e-9 * dt;
  MetricState s0 = start_state && start_state->has_tangents() && start_state->params().packed() == p
                       ? *start_state
                       : MetricState(grid, family, MetricParams::unpack(p), cut);
  double e0 = mesh::energy(s0, u);
  while (remaining > 0.0) {
    const double step = std::min(sub, remaining);
    const Projection k1 = metric_velocity(s0, u);
    const ParamVector mid = p + 0.5 * step * k1.coeffs;
    bool ok = !hits_floor(mid, opts) && !hits_ceiling(mid, opts);
    ParamVector next;
    double diss = 0.0;
    std::optional<MetricState> s1;
    double e1 = e0;
    if (ok) {
      const MetricState sm(grid, family, MetricParams::unpack(mid), cut);
      const Projection k2 = metric_velocity(sm, u);
      next = p + step * k2.coeffs;
      diss = step * k2.dtg_norm * k2.dtg_norm;
      ok = !hits_floor(next, opts) && !hits_ceiling(next, opts);
      if (ok) {
        s1.emplace(grid, family, MetricParams::unpack(next), cut);
        e1 = mesh::energy(*s1, u);
        if (opts.energy_guard && e1 > e0 + 1e-14 * std::abs(e0)) ok = false;
      }
    }
    if (!ok) {
      if (step * 0.5 < min_sub) {
        const ParamVector probe = p + step * k1.coeffs;
        if (hits_floor(probe, opts) || hits_floor(mid, opts)) {
          p(0) = opts.ell_floor;
          res.event = MetricEvent::EllFloor;
          s0 = MetricState(grid, family, MetricParams::unpack(p), cut);
        } else if (hits_ceiling(probe, opts) || hits_ceiling(mid, opts)) {
          res.event = MetricEvent::BCeiling;
        } else {
          throw NumericalError("ode_step: energy guard could not be satisfied");
        }
        break;
      }
      sub = step * 0.5;
      continue;
    }
    p = next;
    s0 = std::move(*s1);
    e0 = e1;
    remaining -= step;
    if (remaining < 1e-15 * dt) remaining = 0.0;
    res.dissipation += diss;
    ++res.substeps;
    sub = std::min(2.0 * sub, dt / opts.n_sub);
  }
  res.params = MetricParams::unpack(p);
  res.state.emplace(std::move(s0));
  return res;
}

/// I = sum |T| sqrt(det g) e(u, g) rho^{-2}.
inline double weighted_energy_I(const MetricState& s, const Eigen::MatrixXd& u) {
  const auto& tris = s.grid().triangles();
  double acc = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const metric::Cell& c = s.cells()[t];
    const mesh::Sym2 p = mesh::triangle_pullback(tris[t], u);
    const double e = 0.5 * (c.ginv.xx * p.xx + 2.0 * c.ginv.xt * p.xt + c.ginv.tt * p.tt);
    acc += c.weight * e / (c.rho * c.rho);
  }
  return acc;
}

/// Same quadrature with a prescribed energy density per triangle.
inline double weighted_integral(const MetricState& s, const std::vector<double>& density) {
  double acc = 0.0;
  for (std::size_t t = 0; t < s.cells().size(); ++t) {
    const metric::Cell& c = s.cells()[t];
    acc += c.weight * density[t] / (c.rho * c.rho);
  }
  return acc;
}

}  // namespace plateau_flow::hopf
