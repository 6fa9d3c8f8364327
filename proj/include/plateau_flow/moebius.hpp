#pragma once
// Boundary diffeomorphisms h_{b,phi} of C0 built from Moebius transforms.
//
//   M_{b,phi}(z) = e^{i phi} (z + b) / (1 + conj(b) z),   |b| < 1
//
// On |z| = 1 the argument of M is theta + phi + 2 arg(1 + b e^{-i theta}); the
// real part of 1 + b e^{-i theta} is at least 1 - |b| > 0, so this expression
// is already the continuous lift with f_{0,0} = id, unbounded in phi.
//
// For x >= 0:  h(x, theta) = (x, theta + l1(x) (f_{b+}(theta) - theta) + l2(x) phi+)
// and the mirror image with (b-, phi-) and l(-x) for x <= 0.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "plateau_flow/error.hpp"

namespace plateau_flow::moebius {

using cplx = std::complex<double>;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Parameter order used for tangent tensors and the metric ODE.
enum Param : int { kReBPlus = 0, kImBPlus, kReBMinus, kImBMinus, kPhiPlus, kPhiMinus };
inline constexpr int kParamCount = 6;

struct DiffeoParams {
  cplx b_plus{};
  cplx b_minus{};
  double phi_plus = 0.0;
  double phi_minus = 0.0;

  void validate() const {
    if (!(std::abs(b_plus) < 1.0) || !(std::abs(b_minus) < 1.0)) throw ParameterError("moebius: need |b| < 1");
    if (!std::isfinite(phi_plus) || !std::isfinite(phi_minus)) throw ParameterError("moebius: non-finite phi");
  }

  std::array<double, kParamCount> packed() const {
    return {b_plus.real(), b_plus.imag(), b_minus.real(), b_minus.imag(), phi_plus, phi_minus};
  }
  static DiffeoParams unpack(const std::array<double, kParamCount>& p) {
    return {{p[0], p[1]}, {p[2], p[3]}, p[4], p[5]};
  }
};

/// C-infinity ramp: 0 for x <= lo, 1 for x >= hi, built from exp(-1/t).
class Smoothstep {
 public:
  constexpr Smoothstep(double lo, double hi) : lo_(lo), hi_(hi) {}

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double value(double x) const {
    const double t = (x - lo_) / (hi_ - lo_);
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = bump(t), b = bump(1.0 - t);
    return a / (a + b);
  }

  double derivative(double x) const {
    const double t = (x - lo_) / (hi_ - lo_);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = bump(t), b = bump(1.0 - t);
    const double da = a / (t * t), db = b / ((1.0 - t) * (1.0 - t));
    return (da * b + a * db) / ((a + b) * (a + b)) / (hi_ - lo_);
  }

 private:
  static double bump(double t) { return std::exp(-1.0 / t); }

  double lo_;
  double hi_;
};

/// lambda_1 ramps on [3/4, 7/8], lambda_2 on [1/2, 5/8].
struct CutoffPair {
  Smoothstep lambda1{0.75, 0.875};
  Smoothstep lambda2{0.5, 0.625};

  static CutoffPair standard() { return {}; }
};

/// Continuous lift f_{b,phi}(theta) of the boundary action of M_{b,phi}.
inline double mobius_angle(cplx b, double phi, double theta) {
  if (!(std::abs(b) < 1.0)) throw ParameterError("mobius_angle: need |b| < 1");
  const cplx w = 1.0 + b * std::polar(1.0, -theta);
  return theta + phi + 2.0 * std::atan2(w.imag(), w.real());
}

/// d/dtheta f_b(theta) = (1 - |b|^2) / |e^{i theta} + b|^2.
inline double mobius_angle_dtheta(cplx b, double theta) {
  const cplx q = 1.0 / (std::polar(1.0, theta) + b);
  return (1.0 - std::norm(b)) * std::norm(q);
}

/// f_b and its derivatives in theta, Re b and Im b (phi = 0).
struct AngleJet {
  double shift = 0.0;       ///< f_b(theta) - theta
  double d_theta = 0.0;     ///< f_b'
  double d_re = 0.0;        ///< df/d Re b
  double d_im = 0.0;        ///< df/d Im b
  double d_theta_re = 0.0;  ///< d^2 f / dtheta d Re b
  double d_theta_im = 0.0;  ///< d^2 f / dtheta d Im b
};

inline AngleJet mobius_angle_jet(cplx b, double theta) {
  const cplx e = std::polar(1.0, theta);
  const cplx w = 1.0 + b * std::conj(e);
  const cplx q = 1.0 / (e + b);
  const cplx dq = cplx(0.0, -1.0) * e * q * q;
  AngleJet j;
  j.shift = 2.0 * std::atan2(w.imag(), w.real());
  j.d_theta = (1.0 - std::norm(b)) * std::norm(q);
  j.d_re = 2.0 * q.imag();
  j.d_im = 2.0 * q.real();
  j.d_theta_re = 2.0 * dq.imag();
  j.d_theta_im = 2.0 * dq.real();
  return j;
}

/// Image angle Theta = h^theta(x, theta), its first derivatives, and the
/// derivatives of (Theta, Theta_x, Theta_theta) in the six parameters.
struct HJet {
  double theta = 0.0;
  double d_x = 0.0;
  double d_theta = 1.0;
  std::array<double, kParamCount> dp{};
  std::array<double, kParamCount> dp_x{};
  std::array<double, kParamCount> dp_theta{};
};

inline HJet h_jet(const DiffeoParams& p, const CutoffPair& cut, double x, double theta) {
  HJet out;
  out.theta = theta;
  const bool plus = x >= 0.0;
  const double t = plus ? x : -x;
  const double sign = plus ? 1.0 : -1.0;  // dt/dx
  const double l1 = cut.lambda1.value(t), l2 = cut.lambda2.value(t);
  const double dl1 = cut.lambda1.derivative(t) * sign, dl2 = cut.lambda2.derivative(t) * sign;
  if (l1 == 0.0 && l2 == 0.0 && dl1 == 0.0 && dl2 == 0.0) return out;

  const cplx b = plus ? p.b_plus : p.b_minus;
  const double phi = plus ? p.phi_plus : p.phi_minus;
  const int ire = plus ? kReBPlus : kReBMinus;
  const int iim = plus ? kImBPlus : kImBMinus;
  const int iphi = plus ? kPhiPlus : kPhiMinus;

  const AngleJet f = mobius_angle_jet(b, theta);
  out.theta = theta + l1 * f.shift + l2 * phi;
  out.d_x = dl1 * f.shift + dl2 * phi;
  out.d_theta = 1.0 + l1 * (f.d_theta - 1.0);

  out.dp[ire] = l1 * f.d_re;
  out.dp[iim] = l1 * f.d_im;
  out.dp[iphi] = l2;
  out.dp_x[ire] = dl1 * f.d_re;
  out.dp_x[iim] = dl1 * f.d_im;
  out.dp_x[iphi] = dl2;
  out.dp_theta[ire] = l1 * f.d_theta_re;
  out.dp_theta[iim] = l1 * f.d_theta_im;
  return out;
}

/// h_{b,phi}(x, theta); x is unchanged.
inline std::pair<double, double> h_map(const DiffeoParams& p, const CutoffPair& cut, double x, double theta) {
  p.validate();
  return {x, h_jet(p, cut, x, theta).theta};
}

/// Solves h^theta(x, theta) = theta_img for theta (safeguarded Newton).
inline double h_inverse(const DiffeoParams& p, const CutoffPair& cut, double x, double theta_img) {
  p.validate();
  const double t = std::abs(x);
  const double phi = x >= 0.0 ? p.phi_plus : p.phi_minus;
  // |Theta - theta - l2 phi| <= l1 * pi
  const double centre = theta_img - cut.lambda2.value(t) * phi;
  double lo = centre - std::numbers::pi - 1e-9, hi = centre + std::numbers::pi + 1e-9;
  double th = centre;
  for (int it = 0; it < 200; ++it) {
    const HJet j = h_jet(p, cut, x, th);
    const double r = j.theta - theta_img;
    if (std::abs(r) <= 1e-14 * std::max(1.0, std::abs(theta_img))) return th;
    (r > 0.0 ? hi : lo) = th;
    double next = th - r / j.d_theta;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(th))) return next;
    th = next;
  }
  throw NumericalError("h_inverse: no convergence");
}

}  // namespace plateau_flow::moebius
