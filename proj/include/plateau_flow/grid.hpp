#pragma once
// Tensor grid on C0 = [-1,1] x S^1 and the per-triangle value types.
//
// Nodes (i, j), i = 0..n_x, j = 0..n_theta-1, stored row-major in i so that the
// interior nodes form one contiguous block. Each cell is split along the
// diagonal (i,j)-(i+1,j+1).

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/error.hpp"

namespace plateau_flow::mesh {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Symmetric 2x2 coordinate tensor in (x, theta).
struct Sym2 {
  double xx = 0.0;
  double xt = 0.0;
  double tt = 0.0;

  double det() const { return xx * tt - xt * xt; }
  Sym2 inverse() const {
    const double d = det();
    return {tt / d, -xt / d, xx / d};
  }
  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xt + o.xt, tt + o.tt}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xt - o.xt, tt - o.tt}; }
  Sym2 operator*(double a) const { return {a * xx, a * xt, a * tt}; }
};

/// tr(ginv A ginv B): the pointwise inner product <A,B>_g.
inline double pair(const Sym2& ginv, const Sym2& a, const Sym2& b) {
  // P = ginv A, Q = ginv B, result tr(PQ)
  const double p00 = ginv.xx * a.xx + ginv.xt * a.xt, p01 = ginv.xx * a.xt + ginv.xt * a.tt;
  const double p10 = ginv.xt * a.xx + ginv.tt * a.xt, p11 = ginv.xt * a.xt + ginv.tt * a.tt;
  const double q00 = ginv.xx * b.xx + ginv.xt * b.xt, q01 = ginv.xx * b.xt + ginv.xt * b.tt;
  const double q10 = ginv.xt * b.xx + ginv.tt * b.xt, q11 = ginv.xt * b.xt + ginv.tt * b.tt;
  return p00 * q00 + p01 * q10 + p10 * q01 + p11 * q11;
}

/// Per-triangle symmetric tensors (metrics, Lie-derivative variations, Re Phi).
using TensorField = std::vector<Sym2>;

struct Triangle {
  std::array<std::size_t, 3> v{};
  /// Gradient coefficients: d/dx = sum gx[k] u[v[k]], d/dtheta likewise.
  std::array<double, 3> gx{};
  std::array<double, 3> gt{};
  double xc = 0.0;  ///< centroid x
  double tc = 0.0;  ///< centroid theta
};

class Grid {
 public:
  Grid(int n_x, int n_theta) : n_x_(n_x), n_theta_(n_theta) {
    if (n_x < 8) throw ParameterError("grid: n_x must be >= 8");
    if (n_theta < 12 || n_theta % 3 != 0) throw ParameterError("grid: n_theta must be >= 12 and divisible by 3");
    dx_ = 2.0 / n_x;
    dtheta_ = two_pi / n_theta;
    build_triangles();
  }

  int n_x() const { return n_x_; }
  int n_theta() const { return n_theta_; }
  double dx() const { return dx_; }
  double dtheta() const { return dtheta_; }
  double x(int i) const { return -1.0 + dx_ * i; }
  double theta(int j) const { return dtheta_ * j; }

  std::size_t node_count() const { return static_cast<std::size_t>(n_x_ + 1) * n_theta_; }
  std::size_t node(int i, int j) const {
    const int jj = ((j % n_theta_) + n_theta_) % n_theta_;
    return static_cast<std::size_t>(i) * n_theta_ + jj;
  }
  /// Interior nodes are [interior_begin, interior_begin + interior_count).
  std::size_t interior_begin() const { return static_cast<std::size_t>(n_theta_); }
  std::size_t interior_count() const { return static_cast<std::size_t>(n_x_ - 1) * n_theta_; }
  std::size_t minus_row() const { return 0; }
  std::size_t plus_row() const { return static_cast<std::size_t>(n_x_) * n_theta_; }

  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t triangle_count() const { return triangles_.size(); }
  /// Parameter-space area of every triangle.
  double triangle_area() const { return 0.5 * dx_ * dtheta_; }

  /// Boundary columns j of the three anchors theta_k = 2 pi k / 3.
  std::array<int, 3> anchor_columns() const { return {0, n_theta_ / 3, 2 * n_theta_ / 3}; }

 private:
  void build_triangles() {
    triangles_.reserve(static_cast<std::size_t>(2) * n_x_ * n_theta_);
    const double ix = 1.0 / dx_, it = 1.0 / dtheta_;
    for (int i = 0; i < n_x_; ++i) {
      for (int j = 0; j < n_theta_; ++j) {
        const std::size_t a = node(i, j), b = node(i + 1, j), c = node(i + 1, j + 1), d = node(i, j + 1);
        // (i,j), (i+1,j), (i+1,j+1)
        triangles_.push_back({{a, b, c}, {-ix, ix, 0.0}, {0.0, -it, it}, x(i) + 2.0 * dx_ / 3.0,
                              theta(j) + dtheta_ / 3.0});
        // (i,j), (i+1,j+1), (i,j+1)
        triangles_.push_back({{a, c, d}, {0.0, ix, -ix}, {-it, 0.0, it}, x(i) + dx_ / 3.0,
                              theta(j) + 2.0 * dtheta_ / 3.0});
      }
    }
  }

  int n_x_;
  int n_theta_;
  double dx_ = 0.0;
  double dtheta_ = 0.0;
  std::vector<Triangle> triangles_;
};

/// Map C0 -> R^n: node values plus the boundary reparametrisations phi_pm,
/// stored as real lifts with phi(theta_j) at column j.
struct SurfaceMap {
  Eigen::MatrixXd values;  ///< node_count x dim
  std::vector<double> phi_minus;
  std::vector<double> phi_plus;

  int dim() const { return static_cast<int>(values.cols()); }
};

/// Piecewise-constant gradient (u_x, u_theta) of the P1 interpolant on triangle t.
template <class Matrix>
inline void triangle_gradient(const Triangle& t, const Matrix& values, Eigen::VectorXd& ux, Eigen::VectorXd& ut) {
  ux = t.gx[0] * values.row(t.v[0]).transpose() + t.gx[1] * values.row(t.v[1]).transpose() +
       t.gx[2] * values.row(t.v[2]).transpose();
  ut = t.gt[0] * values.row(t.v[0]).transpose() + t.gt[1] * values.row(t.v[1]).transpose() +
       t.gt[2] * values.row(t.v[2]).transpose();
}

/// Gram entries (|u_x|^2, <u_x,u_theta>, |u_theta|^2) of the gradient on triangle t.
inline Sym2 triangle_pullback(const Triangle& t, const Eigen::MatrixXd& values) {
  Sym2 out;
  const Eigen::Index dim = values.cols();
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double ux = t.gx[0] * values(t.v[0], d) + t.gx[1] * values(t.v[1], d) + t.gx[2] * values(t.v[2], d);
    const double ut = t.gt[0] * values(t.v[0], d) + t.gt[1] * values(t.v[1], d) + t.gt[2] * values(t.v[2], d);
    out.xx += ux * ux;
    out.xt += ux * ut;
    out.tt += ut * ut;
  }
  return out;
}

}  // namespace plateau_flow::mesh
