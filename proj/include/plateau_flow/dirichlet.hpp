#pragma once
// P1 Dirichlet energy, stiffness / lumped mass, area, Hopf differential and the
// distance between boundary curves.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "plateau_flow/error.hpp"
#include "plateau_flow/grid.hpp"
#include "plateau_flow/metric.hpp"
#include "plateau_flow/parallel.hpp"
#include "plateau_flow/spline.hpp"

namespace plateau_flow::mesh {

using SparseMatrix = Eigen::SparseMatrix<double>;

inline void check_metric(const Grid& grid, const TensorField& g) {
  if (g.size() != grid.triangle_count()) throw ParameterError("metric field does not match the grid");
}

/// E(u, g) = 1/2 sum |T| sqrt(det g) g^{ij} u_i . u_j.
inline double energy(const Grid& grid, const Eigen::MatrixXd& u, const TensorField& g) {
  check_metric(grid, g);
  const auto& tris = grid.triangles();
  std::vector<double> part(tris.size());
  std::atomic<bool> bad{false};
  parallel_for(tris.size(), [&](std::size_t t) {
    const double det = g[t].det();
    if (!(det > 0.0)) {
      bad = true;
      return;
    }
    const Sym2 p = triangle_pullback(tris[t], u);
    const double sd = std::sqrt(det);
    part[t] = (g[t].tt * p.xx - 2.0 * g[t].xt * p.xt + g[t].xx * p.tt) / sd;
  });
  if (bad) throw NumericalError("energy: nonpositive det g");
  double e = 0.0;
  for (double v : part) e += v;
  return 0.5 * grid.triangle_area() * e;
}

inline double energy(const metric::MetricState& s, const Eigen::MatrixXd& u) {
  const auto& tris = s.grid().triangles();
  std::vector<double> part(tris.size());
  parallel_for(tris.size(), [&](std::size_t t) {
    const metric::Cell& c = s.cells()[t];
    const Sym2 p = triangle_pullback(tris[t], u);
    part[t] = c.weight * (c.ginv.xx * p.xx + 2.0 * c.ginv.xt * p.xt + c.ginv.tt * p.tt);
  });
  double e = 0.0;
  for (double v : part) e += v;
  return 0.5 * e;
}

struct Operators {
  SparseMatrix stiffness;
  Eigen::VectorXd mass;  ///< lumped, one entry per node
};

inline Operators assemble_operators(const Grid& grid, const TensorField& g) {
  check_metric(grid, g);
  const auto& tris = grid.triangles();
  const double area = grid.triangle_area();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * tris.size());
  Operators op;
  op.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.node_count()));
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double det = g[t].det();
    if (!(det > 0.0)) throw NumericalError("assemble_operators: nonpositive det g");
    const double sd = std::sqrt(det);
    const Sym2 gi = g[t].inverse();
    const Triangle& tr = tris[t];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double k = area * sd *
                         (gi.xx * tr.gx[a] * tr.gx[b] + gi.xt * (tr.gx[a] * tr.gt[b] + tr.gt[a] * tr.gx[b]) +
                          gi.tt * tr.gt[a] * tr.gt[b]);
        trip.emplace_back(static_cast<int>(tr.v[a]), static_cast<int>(tr.v[b]), k);
      }
      op.mass(static_cast<Eigen::Index>(tr.v[a])) += area * sd / 3.0;
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.node_count());
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(trip.begin(), trip.end());
  return op;
}

inline Operators assemble_operators(const metric::MetricState& s) { return assemble_operators(s.grid(), s.metric()); }

/// sum_T |T| sqrt(|u_x|^2 |u_t|^2 - <u_x, u_t>^2).
inline double area(const Grid& grid, const Eigen::MatrixXd& u) {
  const auto& tris = grid.triangles();
  double s = 0.0;
  for (const Triangle& t : tris) {
    const Sym2 p = triangle_pullback(t, u);
    s += std::sqrt(std::max(0.0, p.det()));
  }
  return grid.triangle_area() * s;
}

/// Area of the triangles whose centroid satisfies pred(xc).
template <class Pred>
inline double area_where(const Grid& grid, const Eigen::MatrixXd& u, Pred pred) {
  double s = 0.0;
  for (const Triangle& t : grid.triangles()) {
    if (!pred(t.xc)) continue;
    const Sym2 p = triangle_pullback(t, u);
    s += std::sqrt(std::max(0.0, p.det()));
  }
  return grid.triangle_area() * s;
}

struct HopfField {
  std::vector<double> phi1;  ///< |u_s|^2 - |u_vartheta|^2
  std::vector<double> phi2;  ///< -2 <u_s, u_vartheta>
  TensorField re_phi;        ///< 2 u^* delta - |du|_g^2 g in (x, theta)
};

/// Re Phi in coordinate form, straight from 2 u^*delta - |du|^2_g g.
inline TensorField re_phi_tensor(const metric::MetricState& s, const Eigen::MatrixXd& u) {
  const auto& tris = s.grid().triangles();
  TensorField out(tris.size());
  parallel_for(tris.size(), [&](std::size_t t) {
    const metric::Cell& c = s.cells()[t];
    const Sym2 p = triangle_pullback(tris[t], u);
    const double du2 = c.ginv.xx * p.xx + 2.0 * c.ginv.xt * p.xt + c.ginv.tt * p.tt;
    out[t] = p * 2.0 - c.g * du2;
  });
  return out;
}

/// (phi1, phi2) in collar coordinates (s, vartheta) = (s_l(x), h^theta(x, theta)),
/// and the same differential transported back to (x, theta).
inline HopfField hopf_components(const metric::MetricState& s, const Eigen::MatrixXd& u) {
  const auto& tris = s.grid().triangles();
  HopfField h;
  h.phi1.resize(tris.size());
  h.phi2.resize(tris.size());
  h.re_phi.resize(tris.size());
  std::atomic<bool> bad{false};
  parallel_for(tris.size(), [&](std::size_t t) {
    const metric::Cell& c = s.cells()[t];
    if (!(c.ds_dx > 0.0) || !(c.theta_t > 0.0)) {
      bad = true;
      return;
    }
    const Sym2 p = triangle_pullback(tris[t], u);
    // u_vartheta = u_t / Theta_t, u_s = (u_x - u_vartheta Theta_x) / s'
    const double a = 1.0 / c.theta_t;
    const double bx = 1.0 / c.ds_dx, bt = -c.theta_x / (c.theta_t * c.ds_dx);
    const double vv = a * a * p.tt;
    const double ss = bx * bx * p.xx + 2.0 * bx * bt * p.xt + bt * bt * p.tt;
    const double sv = a * (bx * p.xt + bt * p.tt);
    const double f1 = ss - vv, f2 = -2.0 * sv;
    h.phi1[t] = f1;
    h.phi2[t] = f2;
    // J^T [[f1, -f2], [-f2, -f1]] J with J = [[s', 0], [Theta_x, Theta_t]]
    const double sp = c.ds_dx, tx = c.theta_x, tt = c.theta_t;
    h.re_phi[t] = {f1 * sp * sp - 2.0 * f2 * sp * tx - f1 * tx * tx, -f2 * sp * tt - f1 * tx * tt, -f1 * tt * tt};
  });
  if (bad) throw NumericalError("hopf_components: singular chart Jacobian");
  return h;
}

/// ||Re Phi||_{L^1(g)} = sum |T| sqrt(det g) |Re Phi|_g over triangles with pred(xc).
template <class Pred>
inline double re_phi_l1(const metric::MetricState& s, const TensorField& re_phi, Pred pred) {
  const auto& tris = s.grid().triangles();
  double acc = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!pred(tris[t].xc)) continue;
    const metric::Cell& c = s.cells()[t];
    acc += c.weight * std::sqrt(std::max(0.0, mesh::pair(c.ginv, re_phi[t], re_phi[t])));
  }
  return acc;
}

inline double re_phi_l1(const metric::MetricState& s, const TensorField& re_phi) {
  return re_phi_l1(s, re_phi, [](double) { return true; });
}

/// ||Re Phi||_{L^1(g)} from quad-centred gradients. The per-triangle P1 gradients
/// sit at staggered points, which leaves an O(dx) error in Re Phi even for
/// exactly conformal nodal data; averaging the two triangles of each quad
/// centres both derivatives and removes it.
template <class Pred>
inline double re_phi_l1_recovered(const metric::MetricState& s, const Eigen::MatrixXd& u, Pred pred) {
  const Grid& grid = s.grid();
  const int nx = grid.n_x(), nt = grid.n_theta();
  const double dx = grid.dx(), dt = grid.dtheta();
  std::vector<double> part(static_cast<std::size_t>(nx) * nt, 0.0);
  parallel_for(part.size(), [&](std::size_t q) {
    const int i = static_cast<int>(q / nt), j = static_cast<int>(q % nt);
    const double xc = grid.x(i) + 0.5 * dx, tc = grid.theta(j) + 0.5 * dt;
    if (!pred(xc)) return;
    auto row = [&](int a, int b) { return u.row(static_cast<Eigen::Index>(grid.node(a, b))); };
    const Eigen::RowVectorXd ux = (row(i + 1, j) - row(i, j) + row(i + 1, j + 1) - row(i, j + 1)) / (2.0 * dx);
    const Eigen::RowVectorXd ut = (row(i, j + 1) - row(i, j) + row(i + 1, j + 1) - row(i + 1, j)) / (2.0 * dt);
    const Sym2 p{ux.squaredNorm(), ux.dot(ut), ut.squaredNorm()};
    const Sym2 g = metric::point_metric(s.chart(), s.params().diffeo, s.cutoffs(), xc, tc);
    const Sym2 gi = g.inverse();
    const double du2 = gi.xx * p.xx + 2.0 * gi.xt * p.xt + gi.tt * p.tt;
    const Sym2 r = p * 2.0 - g * du2;
    part[q] = std::sqrt(g.det()) * dx * dt * std::sqrt(std::max(0.0, mesh::pair(gi, r, r)));
  });
  double acc = 0.0;
  for (double v : part) acc += v;
  return acc;
}

inline double re_phi_l1_recovered(const metric::MetricState& s, const Eigen::MatrixXd& u) {
  return re_phi_l1_recovered(s, u, [](double) { return true; });
}

/// min |c1(s) - c2(t)|: dense sampling, then pattern-search refinement of the best candidates.
inline double delta_gamma(const BoundaryCurve& c1, const BoundaryCurve& c2, int samples = 1024) {
  if (c1.dim() != c2.dim()) throw ParameterError("delta_gamma: curve dimensions differ");
  const int n = samples;
  const int dim = c1.dim();
  const double step = 2.0 * std::numbers::pi / n;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p1(n, dim), p2(n, dim);
  for (int k = 0; k < n; ++k) {
    c1.eval(step * k, p1.row(k).data(), nullptr);
    c2.eval(step * k, p2.row(k).data(), nullptr);
  }
  struct Cand {
    double d2;
    int i, j;
  };
  std::vector<Cand> best;
  for (int i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    int bj = 0;
    for (int j = 0; j < n; ++j) {
      const double d2 = (p1.row(i) - p2.row(j)).squaredNorm();
      if (d2 < bd) {
        bd = d2;
        bj = j;
      }
    }
    best.push_back({bd, i, bj});
  }
  std::sort(best.begin(), best.end(), [](const Cand& a, const Cand& b) { return a.d2 < b.d2; });
  const std::size_t keep = std::min<std::size_t>(best.size(), 16);

  Eigen::VectorXd a(dim), b(dim);
  auto dist2 = [&](double s, double t) {
    c1.eval(s, a.data(), nullptr);
    c2.eval(t, b.data(), nullptr);
    return (a - b).squaredNorm();
  };
  double result = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < keep; ++k) {
    double s = step * best[k].i, t = step * best[k].j;
    double d = dist2(s, t);
    double w = step;
    for (int it = 0; it < 80 && w > 1e-15; ++it) {
      double bs = s, bt = t, bd = d;
      for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v) {
          const double cs = s + 0.5 * w * u, ct = t + 0.5 * w * v;
          const double cd = dist2(cs, ct);
          if (cd < bd) {
            bd = cd;
            bs = cs;
            bt = ct;
          }
        }
      if (bs == s && bt == t) w *= 0.5;
      s = bs;
      t = bt;
      d = bd;
    }
    result = std::min(result, d);
  }
  const double dist = std::sqrt(result);
  if (dist < 1e-9) throw ParameterError("delta_gamma: curves are not disjoint");
  return dist;
}

/// Writes alpha(phi) into the boundary rows of u.
inline void apply_trace(const Grid& grid, const BoundaryCurve& minus, const BoundaryCurve& plus,
                        const std::vector<double>& phi_minus, const std::vector<double>& phi_plus,
                        Eigen::MatrixXd& u) {
  const int nt = grid.n_theta();
  Eigen::VectorXd tmp(u.cols());
  for (int j = 0; j < nt; ++j) {
    minus.eval(phi_minus[j], tmp.data(), nullptr);
    u.row(static_cast<Eigen::Index>(grid.node(0, j))) = tmp.transpose();
    plus.eval(phi_plus[j], tmp.data(), nullptr);
    u.row(static_cast<Eigen::Index>(grid.node(grid.n_x(), j))) = tmp.transpose();
  }
}

/// u0(x, theta) = (1-x)/2 alpha-(theta) + (1+x)/2 alpha+(theta), phi = id.
inline SurfaceMap initial_map(const Grid& grid, const BoundaryCurve& minus, const BoundaryCurve& plus) {
  if (minus.dim() != plus.dim()) throw ParameterError("initial_map: curve dimensions differ");
  SurfaceMap m;
  m.values.resize(static_cast<Eigen::Index>(grid.node_count()), minus.dim());
  m.phi_minus.resize(grid.n_theta());
  m.phi_plus.resize(grid.n_theta());
  for (int j = 0; j < grid.n_theta(); ++j) m.phi_minus[j] = m.phi_plus[j] = grid.theta(j);
  for (int j = 0; j < grid.n_theta(); ++j) {
    const Eigen::VectorXd a = minus(grid.theta(j)), b = plus(grid.theta(j));
    for (int i = 0; i <= grid.n_x(); ++i) {
      const double x = grid.x(i);
      m.values.row(static_cast<Eigen::Index>(grid.node(i, j))) = (0.5 * (1.0 - x) * a + 0.5 * (1.0 + x) * b).transpose();
    }
  }
  apply_trace(grid, minus, plus, m.phi_minus, m.phi_plus, m.values);
  return m;
}

/// sum_v M_v |a_v - b_v|^2.
inline double mass_norm_sq(const Eigen::VectorXd& mass, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index v = 0; v < a.rows(); ++v) s += mass(v) * (a.row(v) - b.row(v)).squaredNorm();
  return s;
}

}  // namespace plateau_flow::mesh
