#pragma once
// Closed boundary curves alpha: S^1 -> R^n as interpolating periodic cubic
// splines through equally spaced control points.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/error.hpp"

namespace plateau_flow::mesh {

class BoundaryCurve {
 public:
  /// control: m x dim, row k sits at parameter 2 pi k / m.
  explicit BoundaryCurve(Eigen::MatrixXd control) : points_(std::move(control)) {
    const Eigen::Index m = points_.rows();
    if (m < 4) throw ParameterError("curve: need at least 4 control points");
    if (points_.cols() < 1) throw ParameterError("curve: dimension must be >= 1");
    if (!points_.allFinite()) throw ParameterError("curve: non-finite control point");
    step_ = 2.0 * std::numbers::pi / static_cast<double>(m);
    solve_second_derivatives();
    check_regular();
  }

  int dim() const { return static_cast<int>(points_.cols()); }
  Eigen::Index control_count() const { return points_.rows(); }
  const Eigen::MatrixXd& control_points() const { return points_; }

  /// Writes alpha(theta) into value and alpha'(theta) into deriv (either may be null).
  void eval(double theta, double* value, double* deriv) const {
    const Eigen::Index m = points_.rows();
    const double period = 2.0 * std::numbers::pi;
    double t = std::fmod(theta, period);
    if (t < 0.0) t += period;
    Eigen::Index k = static_cast<Eigen::Index>(t / step_);
    if (k >= m) k = m - 1;
    const Eigen::Index k1 = (k + 1) % m;
    const double a = t - static_cast<double>(k) * step_;
    const double b = step_ - a;
    const double h = step_;
    for (Eigen::Index d = 0; d < points_.cols(); ++d) {
      const double m0 = second_(k, d), m1 = second_(k1, d);
      const double c0 = points_(k, d) / h - m0 * h / 6.0;
      const double c1 = points_(k1, d) / h - m1 * h / 6.0;
      if (value) value[d] = m0 * b * b * b / (6.0 * h) + m1 * a * a * a / (6.0 * h) + c0 * b + c1 * a;
      if (deriv) deriv[d] = -m0 * b * b / (2.0 * h) + m1 * a * a / (2.0 * h) - c0 + c1;
    }
  }

  Eigen::VectorXd operator()(double theta) const {
    Eigen::VectorXd v(dim());
    eval(theta, v.data(), nullptr);
    return v;
  }

  Eigen::VectorXd derivative(double theta) const {
    Eigen::VectorXd v(dim());
    eval(theta, nullptr, v.data());
    return v;
  }

 private:
  // Cyclic tridiagonal system (h/6) M_{k-1} + (2h/3) M_k + (h/6) M_{k+1} = (P_{k+1} - 2 P_k + P_{k-1}) / h,
  // solved by Sherman-Morrison around the Thomas algorithm.
  void solve_second_derivatives() {
    const Eigen::Index m = points_.rows();
    const double h = step_;
    const double diag = 2.0 * h / 3.0, off = h / 6.0;
    second_.resize(m, points_.cols());

    const double gamma = -diag;
    Eigen::VectorXd main = Eigen::VectorXd::Constant(m, diag);
    main(0) -= gamma;
    main(m - 1) -= off * off / gamma;

    auto thomas = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd c(m), d(m), x(m);
      c(0) = off / main(0);
      d(0) = rhs(0) / main(0);
      for (Eigen::Index i = 1; i < m; ++i) {
        const double den = main(i) - off * c(i - 1);
        c(i) = off / den;
        d(i) = (rhs(i) - off * d(i - 1)) / den;
      }
      x(m - 1) = d(m - 1);
      for (Eigen::Index i = m - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
      return x;
    };

    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    u(0) = gamma;
    u(m - 1) = off;
    const Eigen::VectorXd z = thomas(u);
    const double vz = z(0) + off / gamma * z(m - 1);

    for (Eigen::Index d = 0; d < points_.cols(); ++d) {
      Eigen::VectorXd rhs(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index km = (k + m - 1) % m, kp = (k + 1) % m;
        rhs(k) = (points_(kp, d) - 2.0 * points_(k, d) + points_(km, d)) / h;
      }
      const Eigen::VectorXd y = thomas(rhs);
      const double vy = y(0) + off / gamma * y(m - 1);
      second_.col(d) = y - (vy / (1.0 + vz)) * z;
    }
  }

  void check_regular() const {
    const Eigen::Index samples = 8 * points_.rows();
    Eigen::VectorXd d(dim());
    for (Eigen::Index k = 0; k < samples; ++k) {
      eval(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples), nullptr, d.data());
      if (!(d.norm() > 1e-12)) throw ParameterError("curve: derivative vanishes (curve not regular)");
    }
  }

  Eigen::MatrixXd points_;
  Eigen::MatrixXd second_;
  double step_ = 0.0;
};

}  // namespace plateau_flow::mesh
