#pragma once
// One map update: minimise F(w) = E(w, g) + 1/(2h) ||w - v||^2_{L^2(g)} over
// discrete maps whose boundary rows lie on the curves with monotone, anchored
// parameters.
//
// Block-coordinate descent: for fixed boundary parameters the interior is the
// solution of (S + M/h)_II w_I = (M/h) v_I - S_IB w_B; the boundary parameters
// then take a diagonally scaled projected-gradient step on the reduced
// functional with Armijo backtracking.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "plateau_flow/dirichlet.hpp"
#include "plateau_flow/error.hpp"
#include "plateau_flow/grid.hpp"
#include "plateau_flow/isotonic.hpp"
#include "plateau_flow/spline.hpp"

namespace plateau_flow::plateau {

using mesh::BoundaryCurve;
using mesh::Grid;
using mesh::Operators;
using mesh::SparseMatrix;
using mesh::SurfaceMap;

enum class LinearSolver { Cholesky, PCG };

struct StepOptions {
  int max_inner = 200;
  double rel_tol = 1e-11;   ///< stop when the relative decrease of F drops below this
  double tol_lin = 1e-10;   ///< PCG relative tolerance
  double tol_kkt = 1e-6;    ///< the decrease test only stops the loop once the KKT residual is below this
  bool update_boundary = true;
  bool clamp = false;       ///< project onto the ball of radius ||v||_inf afterwards
  LinearSolver solver = LinearSolver::Cholesky;
};

struct StepResult {
  SurfaceMap w;
  double f_initial = 0.0;  ///< F(v)
  double f_final = 0.0;    ///< F(w)
  double energy = 0.0;     ///< E(w, g)
  double dist_sq = 0.0;    ///< ||w - v||^2_{L^2(g)}
  int inner_iterations = 0;
  double lin_residual = 0.0;   ///< relative residual of the interior system
  double kkt_residual = 0.0;   ///< max |phi - P(phi - D^{-1} grad)|
  bool clamped = false;
};

/// Anchors phi(theta_k) = theta_k for columns 0, n/3, 2n/3, plus the wrap n -> 2 pi.
inline std::vector<Anchor> boundary_anchors(const Grid& grid) {
  const auto cols = grid.anchor_columns();
  const double tp = 2.0 * std::numbers::pi;
  return {{static_cast<std::size_t>(cols[0]), 0.0},
          {static_cast<std::size_t>(cols[1]), tp / 3.0},
          {static_cast<std::size_t>(cols[2]), 2.0 * tp / 3.0},
          {static_cast<std::size_t>(grid.n_theta()), tp}};
}

struct BoundaryGradient {
  std::vector<double> minus;
  std::vector<double> plus;
};

/// dF/dphi at every boundary node: ((S w)_j + M_j/h (w_j - v_j)) . alpha'(phi_j).
inline BoundaryGradient boundary_gradient(const Grid& grid, const Operators& op, const BoundaryCurve& minus,
                                          const BoundaryCurve& plus, const SurfaceMap& w, const SurfaceMap& v,
                                          double inv_h) {
  const Eigen::MatrixXd sw = op.stiffness * w.values;
  const int nt = grid.n_theta();
  BoundaryGradient g;
  g.minus.resize(nt);
  g.plus.resize(nt);
  Eigen::VectorXd d(w.dim());
  for (int side = 0; side < 2; ++side) {
    const int i = side == 0 ? 0 : grid.n_x();
    const BoundaryCurve& c = side == 0 ? minus : plus;
    const std::vector<double>& phi = side == 0 ? w.phi_minus : w.phi_plus;
    std::vector<double>& out = side == 0 ? g.minus : g.plus;
    for (int j = 0; j < nt; ++j) {
      const auto node = static_cast<Eigen::Index>(grid.node(i, j));
      c.eval(phi[j], nullptr, d.data());
      const Eigen::VectorXd r =
          sw.row(node).transpose() + inv_h * op.mass(node) * (w.values.row(node) - v.values.row(node)).transpose();
      out[j] = r.dot(d);
    }
  }
  return g;
}

/// F(w) = 1/2 tr(w^T S w) + inv_h/2 ||w - v||^2_M.
inline double functional_F(const Operators& op, const Eigen::MatrixXd& w, const Eigen::MatrixXd& v, double inv_h) {
  const Eigen::MatrixXd sw = op.stiffness * w;
  double e = 0.0;
  for (Eigen::Index c = 0; c < w.cols(); ++c) e += w.col(c).dot(sw.col(c));
  double f = 0.5 * e;
  if (inv_h > 0.0) f += 0.5 * inv_h * mesh::mass_norm_sq(op.mass, w, v);
  return f;
}

class StepSolver {
 public:
  StepSolver(const Grid& grid, const Operators& op, const BoundaryCurve& minus, const BoundaryCurve& plus,
             double inv_h, const StepOptions& opts)
      : grid_(grid), op_(op), minus_(minus), plus_(plus), inv_h_(inv_h), opts_(opts) {
    if (!(inv_h >= 0.0) || !std::isfinite(inv_h)) throw ParameterError("minimize_step: need h > 0");
    i0_ = static_cast<Eigen::Index>(grid.interior_begin());
    ni_ = static_cast<Eigen::Index>(grid.interior_count());
    SparseMatrix a = op.stiffness.block(i0_, i0_, ni_, ni_);
    if (inv_h > 0.0)
      for (Eigen::Index k = 0; k < ni_; ++k) a.coeffRef(k, k) += inv_h * op.mass(i0_ + k);
    a.makeCompressed();
    a_ = std::move(a);
    if (opts.solver == LinearSolver::Cholesky) {
      ldlt_.compute(a_);
      if (ldlt_.info() != Eigen::Success) throw NumericalError("minimize_step: factorisation failed");
    } else {
      cg_.setTolerance(opts.tol_lin);
      cg_.setMaxIterations(static_cast<Eigen::Index>(20 * ni_ + 100));
      cg_.compute(a_);
    }
  }

  /// Solves the interior rows of w given its boundary rows. Returns the relative residual.
  double solve_interior(Eigen::MatrixXd& w, const Eigen::MatrixXd& v) {
    Eigen::MatrixXd wb = w;
    wb.middleRows(i0_, ni_).setZero();
    const Eigen::MatrixXd r = op_.stiffness * wb;
    Eigen::MatrixXd rhs = -r.middleRows(i0_, ni_);
    if (inv_h_ > 0.0)
      for (Eigen::Index k = 0; k < ni_; ++k) rhs.row(k) += inv_h_ * op_.mass(i0_ + k) * v.row(i0_ + k);
    Eigen::MatrixXd x(ni_, w.cols());
    if (opts_.solver == LinearSolver::Cholesky) {
      x = ldlt_.solve(rhs);
    } else {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        Eigen::VectorXd guess = w.middleRows(i0_, ni_).col(c);
        x.col(c) = cg_.solveWithGuess(rhs.col(c), guess);
        if (cg_.info() != Eigen::Success) throw NumericalError("minimize_step: PCG stagnated");
      }
    }
    w.middleRows(i0_, ni_) = x;
    const double rn = rhs.norm();
    return rn > 0.0 ? (a_ * x - rhs).norm() / rn : (a_ * x).norm();
  }

  StepResult run(const SurfaceMap& v, const SurfaceMap& start) {
    StepResult res;
    res.f_initial = functional_F(op_, v.values, v.values, inv_h_);
    SurfaceMap w = start;
    mesh::apply_trace(grid_, minus_, plus_, w.phi_minus, w.phi_plus, w.values);
    res.lin_residual = solve_interior(w.values, v.values);
    double f = functional_F(op_, w.values, v.values, inv_h_);

    const auto anchors = boundary_anchors(grid_);
    const int nt = grid_.n_theta();
    std::vector<double> diag_m(nt), diag_p(nt);
    std::vector<double> prev_phi, prev_grad;
    double t = 1.0;
    int it = 0;
    for (; opts_.update_boundary && it < opts_.max_inner; ++it) {
      const BoundaryGradient g = boundary_gradient(grid_, op_, minus_, plus_, w, v, inv_h_);
      scaling(w, diag_m, diag_p);
      std::vector<double> phi = concat(w.phi_minus, w.phi_plus), grad = concat(g.minus, g.plus);
      std::vector<double> dg = concat(diag_m, diag_p);
      for (std::size_t k : anchor_slots(anchors, nt)) grad[k] = 0.0;

      if (!prev_phi.empty()) {
        double sds = 0.0, sy = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
          const double s = phi[k] - prev_phi[k];
          sds += dg[k] * s * s;
          sy += s * (grad[k] - prev_grad[k]);
        }
        t = sy > 0.0 ? std::clamp(sds / sy, 1e-3, 1e3) : 1.0;
      }
      prev_phi = phi;
      prev_grad = grad;

      bool accepted = false;
      SurfaceMap trial = w;
      double f_trial = f;
      for (int bt = 0; bt < 40; ++bt) {
        std::vector<double> target(phi.size());
        for (std::size_t k = 0; k < phi.size(); ++k) target[k] = phi[k] - t * grad[k] / dg[k];
        project(target, dg, anchors, nt, trial);
        double descent = 0.0;
        for (int j = 0; j < nt; ++j) {
          descent += grad[j] * (trial.phi_minus[j] - w.phi_minus[j]);
          descent += grad[nt + j] * (trial.phi_plus[j] - w.phi_plus[j]);
        }
        if (!(descent < 0.0)) break;
        mesh::apply_trace(grid_, minus_, plus_, trial.phi_minus, trial.phi_plus, trial.values);
        res.lin_residual = solve_interior(trial.values, v.values);
        f_trial = functional_F(op_, trial.values, v.values, inv_h_);
        if (f_trial <= f + 1e-4 * descent) {
          accepted = true;
          break;
        }
        t *= 0.5;
        trial = w;
      }
      if (!accepted) break;
      const double dec = f - f_trial;
      w = std::move(trial);
      f = f_trial;
      if (dec <= opts_.rel_tol * std::max(std::abs(f), 1e-300) && kkt(w, v, anchors) <= opts_.tol_kkt) {
        ++it;
        break;
      }
    }
    res.inner_iterations = it;
    res.kkt_residual = kkt(w, v, anchors);

    if (opts_.clamp) {
      double radius = 0.0;
      for (Eigen::Index r = 0; r < v.values.rows(); ++r) radius = std::max(radius, v.values.row(r).norm());
      SurfaceMap c = w;
      bool changed = false;
      for (Eigen::Index r = i0_; r < i0_ + ni_; ++r) {
        const double nr = c.values.row(r).norm();
        if (nr > radius) {
          c.values.row(r) *= radius / nr;
          changed = true;
        }
      }
      if (changed) {
        const double fc = functional_F(op_, c.values, v.values, inv_h_);
        if (fc <= f) {
          w = std::move(c);
          f = fc;
          res.clamped = true;
        }
      }
    }

    if (f > res.f_initial + 1e-12 * std::max(1.0, std::abs(res.f_initial)))
      throw NumericalError("minimize_step: F increased");
    res.f_final = f;
    res.dist_sq = mesh::mass_norm_sq(op_.mass, w.values, v.values);
    res.energy = f - 0.5 * inv_h_ * res.dist_sq;
    res.w = std::move(w);
    return res;
  }

 private:
  static std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }

  static std::vector<std::size_t> anchor_slots(const std::vector<Anchor>& anchors, int nt) {
    std::vector<std::size_t> out;
    for (const Anchor& a : anchors) {
      if (a.first >= static_cast<std::size_t>(nt)) continue;
      out.push_back(a.first);
      out.push_back(a.first + nt);
    }
    return out;
  }

  void scaling(const SurfaceMap& w, std::vector<double>& dm, std::vector<double>& dp) const {
    const int nt = grid_.n_theta();
    Eigen::VectorXd d(w.dim());
    for (int side = 0; side < 2; ++side) {
      const int i = side == 0 ? 0 : grid_.n_x();
      const BoundaryCurve& c = side == 0 ? minus_ : plus_;
      const std::vector<double>& phi = side == 0 ? w.phi_minus : w.phi_plus;
      std::vector<double>& out = side == 0 ? dm : dp;
      for (int j = 0; j < nt; ++j) {
        const auto node = static_cast<Eigen::Index>(grid_.node(i, j));
        c.eval(phi[j], nullptr, d.data());
        out[j] = (op_.stiffness.coeff(node, node) + inv_h_ * op_.mass(node)) * d.squaredNorm();
        out[j] = std::max(out[j], 1e-300);
      }
    }
  }

  static void project(const std::vector<double>& target, const std::vector<double>& dg,
                      const std::vector<Anchor>& anchors, int nt, SurfaceMap& out) {
    std::vector<double> ym(target.begin(), target.begin() + nt), yp(target.begin() + nt, target.end());
    std::vector<double> wm(dg.begin(), dg.begin() + nt), wp(dg.begin() + nt, dg.end());
    out.phi_minus = isotonic_project(std::move(ym), anchors, wm);
    out.phi_plus = isotonic_project(std::move(yp), anchors, wp);
  }

  double kkt(const SurfaceMap& w, const SurfaceMap& v, const std::vector<Anchor>& anchors) const {
    if (!opts_.update_boundary) return 0.0;
    const int nt = grid_.n_theta();
    const BoundaryGradient g = boundary_gradient(grid_, op_, minus_, plus_, w, v, inv_h_);
    std::vector<double> dm(nt), dp(nt);
    scaling(w, dm, dp);
    std::vector<double> phi = concat(w.phi_minus, w.phi_plus), grad = concat(g.minus, g.plus);
    std::vector<double> dg = concat(dm, dp);
    std::vector<double> target(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) target[k] = phi[k] - grad[k] / dg[k];
    SurfaceMap p = w;
    project(target, dg, anchors, nt, p);
    double r = 0.0;
    for (int j = 0; j < nt; ++j) {
      r = std::max(r, std::abs(p.phi_minus[j] - w.phi_minus[j]));
      r = std::max(r, std::abs(p.phi_plus[j] - w.phi_plus[j]));
    }
    return r;
  }

  const Grid& grid_;
  const Operators& op_;
  const BoundaryCurve& minus_;
  const BoundaryCurve& plus_;
  double inv_h_;
  StepOptions opts_;
  Eigen::Index i0_ = 0;
  Eigen::Index ni_ = 0;
  SparseMatrix a_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg_;
};

/// Minimises F^h_{g,v} starting from v. inv_h = 1/h; inv_h = 0 gives the harmonic problem.
inline StepResult minimize_step(const Grid& grid, const Operators& op, const BoundaryCurve& minus,
                                const BoundaryCurve& plus, const SurfaceMap& v, double inv_h,
                                const StepOptions& opts = {}) {
  StepSolver solver(grid, op, minus, plus, inv_h, opts);
  return solver.run(v, v);
}

}  // namespace plateau_flow::plateau
