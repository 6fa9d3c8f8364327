#pragma once
// Hyperbolic collar geometry on the fixed cylinder C0 = [-1,1] x S^1.
//
// The collar metric rho_l(s)^2 (ds^2 + dtheta^2) lives on [-Y(l), Y(l)] x S^1
// and is pulled back to C0 by x -> s_l(x). With c(x) = l0 tan(l0 x / 2pi)
// every quantity has an elementary closed form:
//
//   s_l(x)        = (2pi/l) atan(c/l)
//   s_l'(x)       = (l0^2 + c^2) / (l^2 + c^2)
//   rho_l(s_l)^2  = (l^2 + c^2) / 4pi^2
//
// which is what the evaluators below use.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plateau_flow/error.hpp"

namespace plateau_flow::collar {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Diagonal coordinate tensor (G_xx, G_thetatheta).
struct Diag {
  double xx = 0.0;
  double tt = 0.0;
};

struct CollarParams {
  double eta = 1.0;
  double ell = 1.0;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("collar: eta must be positive");
    if (!(ell > 0.0) || !std::isfinite(ell)) throw ParameterError("collar: ell must be positive");
  }
};

/// pi/2 - atan(t) for t > 0 without cancellation at large t.
inline double arccot_positive(double t) {
  return t > 1.0 ? std::atan(1.0 / t) : pi / 2.0 - std::atan(t);
}

/// Conformal factor rho_l(s) = l / (2 pi cos(l s / 2pi)).
inline double rho(double ell, double s) {
  if (!(ell > 0.0)) throw DomainError("rho: ell must be positive");
  const double arg = ell * s / two_pi;
  if (!(std::abs(arg) < pi / 2.0)) throw DomainError("rho: |s| >= pi^2/ell");
  return ell / (two_pi * std::cos(arg));
}

/// Half length Y(l) = (2pi/l)(pi/2 - atan(eta l)) of the collar chart.
inline double half_length_Y(double eta, double ell) {
  CollarParams{eta, ell}.validate();
  return two_pi / ell * arccot_positive(eta * ell);
}

inline double half_length_Y(const CollarParams& p) { return half_length_Y(p.eta, p.ell); }

/// Root l0 of Y(l0) = 1, by bisection to 1e-12 (Y is strictly decreasing).
inline double normalization_ell0(double eta) {
  if (!(eta > 0.0)) throw ParameterError("collar: eta must be positive");
  double lo = 1e-8;
  double hi = 1.0;
  while (half_length_Y(eta, hi) > 1.0) hi *= 2.0;
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (half_length_Y(eta, mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Chart x -> s_l(x) from C0 onto the collar [-Y, Y] x S^1 for a fixed l.
class CollarChart {
 public:
  CollarChart(double eta, double ell, double ell0) : eta_(eta), ell_(ell), ell0_(ell0) {
    CollarParams{eta, ell}.validate();
    half_length_ = half_length_Y(eta, ell);
  }

  double eta() const { return eta_; }
  double ell() const { return ell_; }
  double ell0() const { return ell0_; }
  double half_length() const { return half_length_; }

  /// c(x) = l0 tan(l0 x / 2pi); equals 1/eta at x = 1.
  double c(double x) const { return ell0_ * std::tan(ell0_ * clamp(x) / two_pi); }

  double s(double x) const { return two_pi / ell_ * std::atan(c(x) / ell_); }

  double ds_dx(double x) const {
    const double cx = c(x);
    return (ell0_ * ell0_ + cx * cx) / (ell_ * ell_ + cx * cx);
  }

  /// rho_l(s_l(x)).
  double conformal_factor(double x) const {
    const double cx = c(x);
    return std::sqrt(ell_ * ell_ + cx * cx) / two_pi;
  }

 private:
  static double clamp(double x) { return std::clamp(x, -1.0, 1.0); }

  double eta_;
  double ell_;
  double ell0_;
  double half_length_ = 0.0;
};

/// The horizontal family eta -> {G_l}; holds the cached normalisation l0.
class CollarFamily {
 public:
  explicit CollarFamily(double eta = 1.0) : eta_(eta), ell0_(normalization_ell0(eta)) {}

  double eta() const { return eta_; }
  double ell0() const { return ell0_; }
  CollarChart chart(double ell) const { return CollarChart(eta_, ell, ell0_); }

 private:
  double eta_;
  double ell0_;
};

/// G_l = f_l^*(rho_l^2 (ds^2 + dtheta^2)) at x.
inline Diag metric_G(const CollarChart& chart, double x) {
  const double cx = chart.c(x);
  const double l2 = chart.ell() * chart.ell();
  const double l02 = chart.ell0() * chart.ell0();
  const double denom = 4.0 * pi * pi;
  return {(l02 + cx * cx) * (l02 + cx * cx) / (denom * (l2 + cx * cx)), (l2 + cx * cx) / denom};
}

/// d/dl G_l at fixed x. Proportional to the pullback of ds^2 - dtheta^2.
inline Diag dG_dell(const CollarChart& chart, double x) {
  const double k = chart.ell() / (2.0 * pi * pi);
  const double sp = chart.ds_dx(x);
  return {-k * sp * sp, k};
}

struct Dz2Norms {
  double sup_norm = 0.0;    ///< ||dz^2||_{L^inf}
  double l2_norm_sq = 0.0;  ///< ||dz^2||^2_{L^2}
};

/// Norms of dz^2 on the collar ([-Y,Y] x S^1, rho_l^2(ds^2 + dtheta^2)).
inline Dz2Norms dz2_norms(double eta, double ell) {
  CollarParams{eta, ell}.validate();
  const double t = eta * ell;
  const double pi4 = pi * pi * pi * pi;
  return {8.0 * pi * pi / (ell * ell),
          64.0 * pi4 / (ell * ell * ell) * (t / (1.0 + t * t) + arccot_positive(t))};
}

/// Cusp limit G_0 of G_l as l -> 0, away from the central circle x = 0.
inline Diag cusp_metric_G0(double eta, double ell0, double x) {
  if (x == 0.0) throw DomainError("cusp_metric_G0: x = 0 is the cusp");
  if (std::abs(x) > 1.0) throw DomainError("cusp_metric_G0: x outside [-1,1]");
  const double a = ell0 * std::abs(x) / two_pi;
  // f_+(x) = (2pi/l0) tan(pi/2 - a) - 2 pi eta, mirrored for x < 0
  const double sigma = two_pi / ell0 * std::tan(pi / 2.0 - a) - two_pi * eta;
  const double dsigma = -1.0 / (std::sin(a) * std::sin(a));
  const double rho0 = 1.0 / (two_pi * eta + sigma);
  return {rho0 * rho0 * dsigma * dsigma, rho0 * rho0};
}

inline Diag cusp_metric_G0(const CollarFamily& family, double x) {
  return cusp_metric_G0(family.eta(), family.ell0(), x);
}

/// Collar coordinate X_delta(l) bounding the delta-thin part; zero for delta < l/2.
inline double thin_part_X(double ell, double delta) {
  if (!(ell > 0.0)) throw DomainError("thin_part_X: ell must be positive");
  if (!(delta > 0.0) || delta > std::asinh(1.0)) throw DomainError("thin_part_X: need 0 < delta <= arsinh(1)");
  if (delta < ell / 2.0) return 0.0;
  const double ratio = std::min(1.0, std::sinh(ell / 2.0) / std::sinh(delta));
  return two_pi / ell * (pi / 2.0 - std::asin(ratio));
}

/// Injectivity radius at collar coordinate s: sinh(inj) cos(l s/2pi) = sinh(l/2).
inline double injectivity_radius(double ell, double s) {
  const double cs = std::cos(ell * s / two_pi);
  if (!(cs > 0.0)) throw DomainError("injectivity_radius: s outside the collar");
  return std::asinh(std::sinh(ell / 2.0) / cs);
}

}  // namespace plateau_flow::collar
