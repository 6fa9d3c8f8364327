#pragma once
// Self-check suites behind `plateau_flow verify`. Each suite evaluates module
// invariants against small reference computations and reports PASS/FAIL.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/collar.hpp"
#include "plateau_flow/dirichlet.hpp"
#include "plateau_flow/hopf.hpp"
#include "plateau_flow/isotonic.hpp"
#include "plateau_flow/metric.hpp"
#include "plateau_flow/moebius.hpp"
#include "plateau_flow/plateau.hpp"
#include "plateau_flow/presets.hpp"

namespace plateau_flow::verify {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
};

struct Suite {
  std::string name;
  std::vector<Check> checks;
  double seconds = 0.0;
  bool passed() const {
    for (const Check& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

struct Options {
  bool full = false;
  /// Test hook: run the moebius suite with a cutoff whose plateau is too short.
  bool corrupt_cutoff = false;
};

namespace detail {

inline constexpr double pi = std::numbers::pi;

inline void below(Suite& s, const std::string& name, double value, double limit) {
  s.checks.push_back({name, std::isfinite(value) && value <= limit, value, limit});
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace detail

inline Suite collar_suite(const Options& o) {
  using namespace detail;
  Suite s{"collar", {}, 0.0};
  const collar::CollarFamily fam(1.0);
  below(s, "Y(1) = pi^2/2", rel(collar::half_length_Y(1.0, 1.0), pi * pi / 2.0), 1e-14);
  below(s, "Y(l0) = 1", std::abs(collar::half_length_Y(1.0, fam.ell0()) - 1.0), 1e-10);
  const collar::CollarChart c05 = fam.chart(0.5);
  below(s, "s(1) = Y", rel(c05.s(1.0), collar::half_length_Y(1.0, 0.5)), 1e-10);
  const collar::CollarChart id = fam.chart(fam.ell0());
  double id_err = 0.0;
  for (int k = 0; k <= 20; ++k) id_err = std::max(id_err, std::abs(id.s(-1.0 + 0.1 * k) - (-1.0 + 0.1 * k)));
  below(s, "s_l0 = id", id_err, 1e-12);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ul(0.05, 8.0), ux(-1.0, 1.0);
  double horiz = 0.0;
  for (int k = 0; k < 50; ++k) {
    const collar::CollarChart ch = fam.chart(ul(rng));
    const double x = ux(rng);
    const collar::Diag d = collar::dG_dell(ch, x);
    const double sp = ch.ds_dx(x);
    horiz = std::max(horiz, std::abs(d.xx / (sp * sp) + d.tt) / std::abs(d.tt));
  }
  below(s, "horizontality residual", horiz, 1e-6);
  // Gauss curvature of G_l by central differences at a few interior points
  double kerr = 0.0;
  for (double ell : {0.3, 1.0, 4.0}) {
    const collar::CollarChart ch = fam.chart(ell);
    auto E = [&](double x) { return collar::metric_G(ch, x).xx; };
    auto G = [&](double x) { return collar::metric_G(ch, x).tt; };
    const double h = 1e-3;
    for (double x : {-0.7, -0.2, 0.1, 0.6}) {
      auto q = [&](double t) { return (G(t + h) - G(t - h)) / (2 * h) / std::sqrt(E(t) * G(t)); };
      const double K = -(q(x + h) - q(x - h)) / (2 * h) / (2 * std::sqrt(E(x) * G(x)));
      kerr = std::max(kerr, std::abs(K + 1.0));
    }
  }
  below(s, "Gauss curvature = -1", kerr, 1e-4);
  below(s, "small-l asymptote", rel(collar::dz2_norms(1.0, 1e-3).l2_norm_sq * 1e-9, 32 * std::pow(pi, 5)), 1e-2);
  (void)o;
  return s;
}

inline Suite norms_suite(const Options&) {
  using namespace detail;
  Suite s{"norms", {}, 0.0};
  for (double ell : {0.1, 1.0, 5.0}) {
    const double Y = collar::half_length_Y(1.0, ell);
    auto f = [ell](double sv) {
      const double r = collar::rho(ell, sv);
      return 2.0 * pi * 4.0 / (r * r);
    };
    const double q = simpson(f, -Y, Y, 20000);
    below(s, "L2 quadrature l=" + std::to_string(ell), rel(q, collar::dz2_norms(1.0, ell).l2_norm_sq), 1e-6);
    const double sup = 2.0 / std::pow(collar::rho(ell, 0.0), 2);
    below(s, "Linf l=" + std::to_string(ell), rel(sup, collar::dz2_norms(1.0, ell).sup_norm), 1e-14);
  }
  return s;
}

inline Suite moebius_suite(const Options& o) {
  using namespace detail;
  Suite s{"moebius", {}, 0.0};
  moebius::CutoffPair cut;
  if (o.corrupt_cutoff) cut.lambda1 = moebius::Smoothstep(0.75, 1.05);
  moebius::DiffeoParams p{std::polar(0.6, 0.4), std::polar(0.45, -2.0), 0.9, -0.35};
  double ident = 0.0, bdry = 0.0, mono = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 64; ++k) {
    const double th = 2.0 * pi * k / 64.0;
    for (double x : {-0.5, -0.3, 0.0, 0.25, 0.5}) ident = std::max(ident, std::abs(moebius::h_jet(p, cut, x, th).theta - th));
    bdry = std::max(bdry, std::abs(moebius::h_jet(p, cut, 1.0, th).theta - moebius::mobius_angle(p.b_plus, p.phi_plus, th)));
    bdry = std::max(bdry, std::abs(moebius::h_jet(p, cut, -1.0, th).theta - moebius::mobius_angle(p.b_minus, p.phi_minus, th)));
    for (int i = 0; i <= 40; ++i) mono = std::min(mono, moebius::h_jet(p, cut, -1.0 + 0.05 * i, th).d_theta);
  }
  below(s, "identity on |x| <= 1/2", ident, 0.0);
  below(s, "boundary action is Moebius", bdry, 1e-13);
  s.checks.push_back({"monotone in theta", mono > 0.0, mono, 0.0});
  below(s, "f'(a=1/2, 0) = 1/3", std::abs(moebius::mobius_angle_dtheta(0.5, 0.0) - 1.0 / 3.0), 1e-15);
  // tangent tensors against central differences of the pulled-back metric
  const collar::CollarFamily fam(1.0);
  metric::MetricParams mp{1.3, p};
  const collar::CollarChart ch = fam.chart(mp.ell);
  double fd = 0.0;
  for (double x : {-0.93, -0.8, 0.56, 0.7, 0.81, 0.95})
    for (double th : {0.3, 2.0, 4.4}) {
      const auto t = metric::point_tangents(ch, p, cut, x, th);
      for (int k = 0; k < metric::kParamCount; ++k) {
        const double d = 1e-5;
        metric::ParamVector a = mp.packed(), b = mp.packed();
        a(k) += d;
        b(k) -= d;
        const auto pa = metric::MetricParams::unpack(a), pb = metric::MetricParams::unpack(b);
        const mesh::Sym2 ga = metric::point_metric(fam.chart(pa.ell), pa.diffeo, cut, x, th);
        const mesh::Sym2 gb = metric::point_metric(fam.chart(pb.ell), pb.diffeo, cut, x, th);
        const mesh::Sym2 diff = (ga - gb) * (0.5 / d) - t[k];
        const double scale = 1.0 + std::abs(t[k].xx) + std::abs(t[k].xt) + std::abs(t[k].tt);
        fd = std::max(fd, (std::abs(diff.xx) + std::abs(diff.xt) + std::abs(diff.tt)) / scale);
      }
    }
  below(s, "tangents vs finite differences", fd, 1e-7);
  const double det = std::abs(metric::anchor_field_matrix(p, cut).determinant());
  s.checks.push_back({"anchor field matrix nonsingular", det > 1e-8, det, 1e-8});
  return s;
}

inline Suite orthogonality_suite(const Options& o) {
  using namespace detail;
  Suite s{"orthogonality", {}, 0.0};
  const mesh::Grid grid(16, o.full ? 384 : 192);
  const collar::CollarFamily fam(1.0);
  double worst = 0.0;
  std::vector<double> norms;
  for (double a : {0.3, 0.6, 0.9}) {
    for (double psi : {0.0, 1.1}) {
      metric::MetricParams mp{1.0, {}};
      mp.diffeo.b_plus = std::polar(a, psi);
      mp.diffeo.phi_plus = 0.4;
      const metric::MetricState st(grid, fam, mp);
      const metric::PolarReport r = metric::polar_report(st);
      worst = std::max({worst, r.rel_abs_arg, r.rel_phi_abs, r.rel_phi_arg});
      if (psi == 0.0) norms.push_back(r.norm_abs);
    }
  }
  below(s, "plus-side cross terms", worst, 1e-6);
  s.checks.push_back({"|b| norm increasing", norms[0] < norms[1] && norms[1] < norms[2], norms[2], norms[1]});
  return s;
}

inline Suite mesh_suite(const Options&) {
  using namespace detail;
  Suite s{"mesh", {}, 0.0};
  const mesh::Grid grid(16, 24);
  const collar::CollarFamily fam(1.0);
  const metric::MetricState st(grid, fam, {0.8, {{0.2, -0.1}, {0.0, 0.3}, 0.5, -0.2}}, {}, false);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd u(static_cast<Eigen::Index>(grid.node_count()), 3);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = nd(rng);
  mesh::TensorField g = st.metric(), g2 = g;
  std::uniform_real_distribution<double> ul(0.1, 10.0);
  for (auto& t : g2) t = t * ul(rng);
  const double e1 = mesh::energy(grid, u, g), e2 = mesh::energy(grid, u, g2);
  below(s, "conformal invariance", rel(e2, e1), 1e-13);
  const mesh::Operators op = mesh::assemble_operators(grid, g);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid.node_count()));
  below(s, "S 1 = 0", (op.stiffness * ones).cwiseAbs().maxCoeff(), 1e-12);
  below(s, "trace M = volume", rel(op.mass.sum(), st.total_volume()), 1e-12);
  double quad = 0.0;
  for (Eigen::Index c = 0; c < 3; ++c) quad += u.col(c).dot(op.stiffness * u.col(c));
  below(s, "E = 1/2 u^T S u", rel(0.5 * quad, e1), 1e-12);
  below(s, "Area <= E", mesh::area(grid, u) - e1, 1e-10);
  return s;
}

inline Suite pava_suite(const Options& o) {
  using namespace detail;
  Suite s{"pava", {}, 0.0};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uy(-1.0, 2.0), uw(0.2, 3.0);
  double worst = 0.0;
  const int trials = o.full ? 500 : 150;
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<double> y(n), w(n);
    for (int i = 0; i < n; ++i) y[i] = uy(rng), w[i] = uw(rng);
    // anchors at both ends of the free segment: index -1 := 0.0 (implicit) and n := 1.0
    const std::vector<plateau::Anchor> anchors{{static_cast<std::size_t>(n), 1.0}};
    std::vector<double> yy = y;
    yy.insert(yy.begin(), 0.0);
    std::vector<double> ww = w;
    ww.insert(ww.begin(), 1.0);
    const std::vector<plateau::Anchor> a2{{0, 0.0}, {static_cast<std::size_t>(n + 1), 1.0}};
    const std::vector<double> z = plateau::isotonic_project(yy, a2, ww);
    // reference: exhaustive over block partitions with optional pinning to the bounds
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> ref;
    for (unsigned cuts = 0; cuts < (1u << (n - 1)); ++cuts)
      for (int pl = 0; pl < 2; ++pl)
        for (int ph = 0; ph < 2; ++ph) {
          std::vector<double> zz(n);
          int start = 0;
          bool first = true;
          for (int i = 0; i < n; ++i) {
            if (i == n - 1 || (cuts & (1u << i))) {
              double sw = 0, sy = 0;
              for (int k = start; k <= i; ++k) sw += w[k], sy += w[k] * y[k];
              double v = sy / sw;
              if (first && pl) v = 0.0;
              if (i == n - 1 && ph) v = 1.0;
              for (int k = start; k <= i; ++k) zz[k] = v;
              start = i + 1;
              first = false;
            }
          }
          bool ok = zz[0] >= 0.0 && zz[n - 1] <= 1.0;
          for (int i = 1; i < n; ++i) ok = ok && zz[i] >= zz[i - 1];
          if (!ok) continue;
          double obj = 0;
          for (int i = 0; i < n; ++i) obj += w[i] * (zz[i] - y[i]) * (zz[i] - y[i]);
          if (obj < best) best = obj, ref = zz;
        }
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(z[i + 1] - ref[i]));
  }
  below(s, "PAVA vs exhaustive QP", worst, 1e-10);
  const auto ex = plateau::isotonic_project({0.2, 0.1, 0.5}, {});
  below(s, "(0.2,0.1,0.5) example", std::abs(ex[0] - 0.15) + std::abs(ex[1] - 0.15) + std::abs(ex[2] - 0.5), 1e-15);
  return s;
}

inline Suite minimizer_suite(const Options& o) {
  using namespace detail;
  Suite s{"minimizer", {}, 0.0};
  const mesh::Grid grid(12, 18);
  const collar::CollarFamily fam(1.0);
  const presets::CurvePair& cp = presets::find_curves("offset-circles");
  const mesh::BoundaryCurve minus(cp.minus), plus(cp.plus);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uh(0.005, 0.5), ub(-0.3, 0.3);
  double worst = -std::numeric_limits<double>::infinity();
  bool anchors_ok = true;
  const int trials = o.full ? 40 : 12;
  for (int t = 0; t < trials; ++t) {
    const metric::MetricParams mp{0.5 + 3.0 * std::abs(ub(rng)), {{ub(rng), ub(rng)}, {ub(rng), ub(rng)}, ub(rng), ub(rng)}};
    const metric::MetricState st(grid, fam, mp, {}, false);
    const mesh::Operators op = mesh::assemble_operators(st);
    mesh::SurfaceMap v = mesh::initial_map(grid, minus, plus);
    for (std::size_t k = grid.interior_begin(); k < grid.interior_begin() + grid.interior_count(); ++k)
      for (Eigen::Index d = 0; d < 3; ++d) v.values(static_cast<Eigen::Index>(k), d) += 0.2 * nd(rng);
    const double h = uh(rng);
    const plateau::StepResult r = plateau::minimize_step(grid, op, minus, plus, v, 1.0 / h);
    const double ev = mesh::energy(st, v.values);
    const double lhs = mesh::energy(st, r.w.values) + 0.5 / h * mesh::mass_norm_sq(op.mass, r.w.values, v.values);
    worst = std::max(worst, (lhs - ev) / ev);
    for (const auto& a : plateau::boundary_anchors(grid))
      if (a.first < static_cast<std::size_t>(grid.n_theta()))
        anchors_ok = anchors_ok && r.w.phi_minus[a.first] == a.second && r.w.phi_plus[a.first] == a.second;
  }
  below(s, "energy inequality", worst, 1e-11);
  s.checks.push_back({"anchors exact", anchors_ok, 0.0, 0.0});
  return s;
}

inline Suite projection_suite(const Options&) {
  using namespace detail;
  Suite s{"projection", {}, 0.0};
  const mesh::Grid grid(24, 36);
  const collar::CollarFamily fam(1.0);
  const metric::MetricState st(grid, fam, {1.7, {{0.3, 0.1}, {-0.2, 0.25}, 0.3, -0.6}});
  metric::ParamVector c;
  c << 0.3, -1.0, 0.5, 0.2, -0.7, 1.1, 0.4;
  mesh::TensorField phi(st.cells().size());
  for (std::size_t t = 0; t < phi.size(); ++t) {
    mesh::Sym2 acc;
    for (int k = 0; k < metric::kParamCount; ++k) acc = acc + st.tangent(k)[t] * c(k);
    phi[t] = acc * 4.0;
  }
  const hopf::Projection p = hopf::project_hopf(phi, st);
  below(s, "idempotence", (p.coeffs - c).norm() / c.norm(), 1e-10);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(grid.node_count()), 3, 0.7);
  below(s, "constant map has zero velocity", hopf::metric_velocity(st, u).coeffs.norm(), 1e-14);
  return s;
}

inline std::vector<Suite> run(const Options& o) {
  using Fn = Suite (*)(const Options&);
  std::vector<std::pair<const char*, Fn>> fns{{"collar", collar_suite},         {"moebius", moebius_suite},
                                              {"orthogonality", orthogonality_suite}, {"mesh", mesh_suite},
                                              {"pava", pava_suite},             {"minimizer", minimizer_suite},
                                              {"projection", projection_suite}};
  if (o.full) fns.insert(fns.begin() + 1, {"norms", norms_suite});
  std::vector<Suite> out;
  for (const auto& [name, f] : fns) {
    const auto t0 = std::chrono::steady_clock::now();
    Suite s;
    try {
      s = f(o);
    } catch (const std::exception& e) {
      s.checks.push_back({std::string("exception: ") + e.what(), false, 0.0, 0.0});
    }
    s.name = name;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace plateau_flow::verify
