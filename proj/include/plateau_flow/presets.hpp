#pragma once
// Built-in boundary curves and scenarios.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plateau_flow/error.hpp"
#include "plateau_flow/flow.hpp"
#include "plateau_flow/spline.hpp"

namespace plateau_flow::presets {

inline constexpr int kControlPoints = 96;

/// Planar ellipse with semi-axes (a, b) at height z, centred at (cx, cy).
inline Eigen::MatrixXd ellipse_points(double a, double b, double z, double cx = 0.0, double cy = 0.0,
                                      int m = kControlPoints) {
  Eigen::MatrixXd p(m, 3);
  for (int k = 0; k < m; ++k) {
    const double t = 2.0 * std::numbers::pi * k / m;
    p(k, 0) = cx + a * std::cos(t);
    p(k, 1) = cy + b * std::sin(t);
    p(k, 2) = z;
  }
  return p;
}

struct CurvePair {
  std::string name;
  std::string description;
  Eigen::MatrixXd minus;  ///< control points of Gamma-
  Eigen::MatrixXd plus;   ///< control points of Gamma+
};

inline std::vector<CurvePair> curve_presets() {
  std::vector<CurvePair> out;
  out.push_back({"circles", "circles r=1 sep=0.8", ellipse_points(1, 1, -0.4), ellipse_points(1, 1, 0.4)});
  out.push_back({"circles-wide", "circles r=1 sep=2.4", ellipse_points(1, 1, -1.2), ellipse_points(1, 1, 1.2)});
  out.push_back({"offset-circles", "circles r=1 sep=0.8 offset=0.3", ellipse_points(1, 1, -0.4),
                 ellipse_points(1, 1, 0.4, 0.3, 0.0)});
  out.push_back({"ellipses", "ellipses a=1.2 b=0.8 sep=0.8", ellipse_points(1.2, 0.8, -0.4),
                 ellipse_points(1.2, 0.8, 0.4)});
  return out;
}

inline const CurvePair& find_curves(const std::string& name) {
  static const std::vector<CurvePair> all = curve_presets();
  for (const CurvePair& c : all)
    if (c.name == name) return c;
  throw ParameterError("unknown curve preset '" + name + "'");
}

struct Scenario {
  std::string name;
  std::string curves;
  flow::FlowConfig config;
};

inline std::vector<Scenario> scenario_presets() {
  flow::FlowConfig cat;
  cat.T = 40.0;
  flow::FlowConfig gold;
  gold.T = 150.0;
  return {{"catenoid-0.8", "circles", cat}, {"goldschmidt-2.4", "circles-wide", gold}};
}

inline const Scenario& find_scenario(const std::string& name) {
  static const std::vector<Scenario> all = scenario_presets();
  for (const Scenario& s : all)
    if (s.name == name) return s;
  throw ParameterError("unknown scenario preset '" + name + "'");
}

}  // namespace plateau_flow::presets
