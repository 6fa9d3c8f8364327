#pragma once
// Admissible metrics g = h_{b,phi}^* G_l sampled at triangle centroids, with
// the seven parameter-tangent tensors and their L^2(g) Gram matrix.
//
// G_l only depends on x and h keeps x fixed, so with Theta = h^theta(x, theta)
//   g_xx = A + B Theta_x^2,  g_xt = B Theta_x Theta_t,  g_tt = B Theta_t^2
// where (A, B) = (G_xx, G_tt)(x).

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/collar.hpp"
#include "plateau_flow/error.hpp"
#include "plateau_flow/grid.hpp"
#include "plateau_flow/moebius.hpp"
#include "plateau_flow/parallel.hpp"

namespace plateau_flow::metric {

using mesh::Sym2;
using mesh::TensorField;
inline constexpr int kParamCount = 7;
using Gram = Eigen::Matrix<double, kParamCount, kParamCount>;
using ParamVector = Eigen::Matrix<double, kParamCount, 1>;

/// (l, Re b+, Im b+, Re b-, Im b-, phi+, phi-).
struct MetricParams {
  double ell = 1.0;
  moebius::DiffeoParams diffeo{};

  ParamVector packed() const {
    ParamVector v;
    v(0) = ell;
    const auto d = diffeo.packed();
    for (int i = 0; i < moebius::kParamCount; ++i) v(i + 1) = d[i];
    return v;
  }
  static MetricParams unpack(const ParamVector& v) {
    std::array<double, moebius::kParamCount> d{};
    for (int i = 0; i < moebius::kParamCount; ++i) d[i] = v(i + 1);
    return {v(0), moebius::DiffeoParams::unpack(d)};
  }
  void validate() const {
    if (!(ell > 0.0) || !std::isfinite(ell)) throw ParameterError("metric: ell must be positive");
    diffeo.validate();
  }
};

/// Metric and collar-chart data of one triangle.
struct Cell {
  Sym2 g;
  Sym2 ginv;
  double sqrt_det = 0.0;
  double weight = 0.0;  ///< |T| sqrt(det g)
  double ds_dx = 0.0;
  double theta_x = 0.0;
  double theta_t = 1.0;
  double rho = 0.0;     ///< conformal factor rho_l(s_l(x))
};

/// g at an arbitrary point (x, theta); used for Lie derivatives and FD oracles.
inline Sym2 point_metric(const collar::CollarChart& chart, const moebius::DiffeoParams& d,
                         const moebius::CutoffPair& cut, double x, double theta) {
  const collar::Diag G = collar::metric_G(chart, x);
  const moebius::HJet j = moebius::h_jet(d, cut, x, theta);
  return {G.xx + G.tt * j.d_x * j.d_x, G.tt * j.d_x * j.d_theta, G.tt * j.d_theta * j.d_theta};
}

/// Analytic d g / d p_k at a point, k in the MetricParams order.
inline std::array<Sym2, kParamCount> point_tangents(const collar::CollarChart& chart, const moebius::DiffeoParams& d,
                                                    const moebius::CutoffPair& cut, double x, double theta) {
  const collar::Diag G = collar::metric_G(chart, x);
  const collar::Diag dG = collar::dG_dell(chart, x);
  const moebius::HJet j = moebius::h_jet(d, cut, x, theta);
  const double B = G.tt;
  std::array<Sym2, kParamCount> t{};
  t[0] = {dG.xx + dG.tt * j.d_x * j.d_x, dG.tt * j.d_x * j.d_theta, dG.tt * j.d_theta * j.d_theta};
  for (int k = 0; k < moebius::kParamCount; ++k) {
    const double px = j.dp_x[k], pt = j.dp_theta[k];
    t[k + 1] = {2.0 * B * j.d_x * px, B * (px * j.d_theta + j.d_x * pt), 2.0 * B * j.d_theta * pt};
  }
  return t;
}

class MetricState {
 public:
  MetricState(const mesh::Grid& grid, const collar::CollarFamily& family, const MetricParams& params,
              const moebius::CutoffPair& cut = {}, bool with_tangents = true)
      : grid_(&grid), family_(family), params_(params), cut_(cut), chart_(family.chart(params.ell)) {
    params.validate();
    build(with_tangents);
  }

  const mesh::Grid& grid() const { return *grid_; }
  const collar::CollarFamily& family() const { return family_; }
  const MetricParams& params() const { return params_; }
  const moebius::CutoffPair& cutoffs() const { return cut_; }
  const collar::CollarChart& chart() const { return chart_; }
  const std::vector<Cell>& cells() const { return cells_; }
  bool has_tangents() const { return !tangents_[0].empty(); }
  const TensorField& tangent(int k) const { return tangents_.at(k); }
  const Gram& gram() const { return gram_; }

  TensorField metric() const {
    TensorField out(cells_.size());
    for (std::size_t t = 0; t < cells_.size(); ++t) out[t] = cells_[t].g;
    return out;
  }

  /// Discrete <A, B>_{L^2(g)}.
  double inner(const TensorField& a, const TensorField& b) const {
    double s = 0.0;
    for (std::size_t t = 0; t < cells_.size(); ++t) s += cells_[t].weight * mesh::pair(cells_[t].ginv, a[t], b[t]);
    return s;
  }

  double total_volume() const {
    double s = 0.0;
    for (const Cell& c : cells_) s += c.weight;
    return s;
  }

 private:
  void build(bool with_tangents) {
    const auto& tris = grid_->triangles();
    const double area = grid_->triangle_area();
    cells_.assign(tris.size(), Cell{});
    if (with_tangents)
      for (auto& f : tangents_) f.assign(tris.size(), Sym2{});
    std::atomic<bool> bad{false};
    parallel_for(tris.size(), [&](std::size_t t) {
      const double x = tris[t].xc, th = tris[t].tc;
      const collar::Diag G = collar::metric_G(chart_, x);
      const moebius::HJet j = moebius::h_jet(params_.diffeo, cut_, x, th);
      Cell& c = cells_[t];
      c.g = {G.xx + G.tt * j.d_x * j.d_x, G.tt * j.d_x * j.d_theta, G.tt * j.d_theta * j.d_theta};
      const double det = c.g.det();
      if (!(det > 0.0) || !std::isfinite(det)) {
        bad = true;
        return;
      }
      c.ginv = c.g.inverse();
      c.sqrt_det = std::sqrt(det);
      c.weight = area * c.sqrt_det;
      c.ds_dx = chart_.ds_dx(x);
      c.theta_x = j.d_x;
      c.theta_t = j.d_theta;
      c.rho = chart_.conformal_factor(x);
      if (with_tangents) {
        const auto tg = point_tangents(chart_, params_.diffeo, cut_, x, th);
        for (int k = 0; k < kParamCount; ++k) tangents_[k][t] = tg[k];
      }
    });
    if (bad) throw NumericalError("metric: nonpositive determinant");
    gram_.setZero();
    if (!with_tangents) return;
    for (int a = 0; a < kParamCount; ++a)
      for (int b = a; b < kParamCount; ++b) gram_(a, b) = gram_(b, a) = inner(tangents_[a], tangents_[b]);
  }

  const mesh::Grid* grid_;
  collar::CollarFamily family_;
  MetricParams params_;
  moebius::CutoffPair cut_;
  collar::CollarChart chart_;
  std::vector<Cell> cells_;
  std::array<TensorField, kParamCount> tangents_;
  Gram gram_ = Gram::Zero();
};

/// g = J^T G(h) J per triangle.
inline TensorField pullback_metric(const mesh::Grid& grid, const collar::CollarFamily& family, const MetricParams& p,
                                   const moebius::CutoffPair& cut = {}) {
  return MetricState(grid, family, p, cut, false).metric();
}

/// The seven tangent tensors T_0 = dg/dl, T_1..T_6 = dg/dp.
inline std::array<TensorField, kParamCount> tangent_tensors(const mesh::Grid& grid, const collar::CollarFamily& family,
                                                           const MetricParams& p,
                                                           const moebius::CutoffPair& cut = {}) {
  const MetricState s(grid, family, p, cut, true);
  std::array<TensorField, kParamCount> out;
  for (int k = 0; k < kParamCount; ++k) out[k] = s.tangent(k);
  return out;
}

/// L^2(g) inner products of the plus-side generating tensors in the polar basis
/// (|b+|, Arg b+, phi+). Requires b+ != 0.
struct PolarReport {
  Eigen::Matrix3d inner;  ///< rows/cols: |b|, Arg b, phi
  double rel_abs_arg = 0.0;
  double rel_phi_abs = 0.0;
  double rel_phi_arg = 0.0;
  double norm_abs = 0.0;  ///< ||L_{Y_|b|} G||
};

inline PolarReport polar_report(const MetricState& s) {
  const std::complex<double> b = s.params().diffeo.b_plus;
  const double r = std::abs(b);
  if (!(r > 0.0)) throw DomainError("polar_report: b+ = 0 has no polar basis");
  const double c = b.real() / r, sn = b.imag() / r;
  const std::size_t n = s.cells().size();
  TensorField t_abs(n), t_arg(n);
  const TensorField& tre = s.tangent(1 + moebius::kReBPlus);
  const TensorField& tim = s.tangent(1 + moebius::kImBPlus);
  for (std::size_t t = 0; t < n; ++t) {
    t_abs[t] = tre[t] * c + tim[t] * sn;
    t_arg[t] = (tre[t] * (-sn) + tim[t] * c) * r;
  }
  const TensorField& tphi = s.tangent(1 + moebius::kPhiPlus);
  const std::array<const TensorField*, 3> f{&t_abs, &t_arg, &tphi};
  PolarReport rep;
  for (int a = 0; a < 3; ++a)
    for (int bb = 0; bb < 3; ++bb) rep.inner(a, bb) = s.inner(*f[a], *f[bb]);
  auto rel = [&](int a, int bb) { return std::abs(rep.inner(a, bb)) / std::sqrt(rep.inner(a, a) * rep.inner(bb, bb)); };
  rep.rel_abs_arg = rel(0, 1);
  rep.rel_phi_abs = rel(2, 0);
  rep.rel_phi_arg = rel(2, 1);
  rep.norm_abs = std::sqrt(rep.inner(0, 0));
  return rep;
}

/// Values of the six generating fields Y_p (theta components, p in Re b+, Im b+,
/// Re b-, Im b-, phi+, phi-) at the anchors (+-1, 2 pi k / 3).
inline Eigen::Matrix<double, 6, 6> anchor_field_matrix(const moebius::DiffeoParams& d,
                                                       const moebius::CutoffPair& cut = {}) {
  Eigen::Matrix<double, 6, 6> m;
  int row = 0;
  for (double x : {1.0, -1.0}) {
    for (int k = 0; k < 3; ++k) {
      const moebius::HJet j = moebius::h_jet(d, cut, x, moebius::two_pi * k / 3.0);
      for (int p = 0; p < 6; ++p) m(row, p) = j.dp[p];
      ++row;
    }
  }
  return m;
}

}  // namespace plateau_flow::metric
