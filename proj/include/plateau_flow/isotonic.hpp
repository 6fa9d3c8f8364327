#pragma once
// Weighted projection onto nondecreasing sequences pinned at anchor indices.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "plateau_flow/error.hpp"

namespace plateau_flow::plateau {

/// (index, value). An index equal to y.size() is allowed and acts only as an
/// upper bound for the tail (used for the wrap-around anchor 2 pi).
using Anchor = std::pair<std::size_t, double>;

namespace detail {

// Pool-adjacent-violators on y[lo, hi), then clamp into [lower, upper].
inline void pava_segment(std::vector<double>& y, const std::vector<double>& w, std::size_t lo, std::size_t hi,
                         double lower, double upper) {
  if (lo >= hi) return;
  struct Block {
    double sum_wy;
    double sum_w;
    std::size_t count;
    double mean() const { return sum_wy / sum_w; }
  };
  std::vector<Block> blocks;
  blocks.reserve(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    blocks.push_back({w[i] * y[i], w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block b = blocks.back();
      blocks.pop_back();
      blocks.back().sum_wy += b.sum_wy;
      blocks.back().sum_w += b.sum_w;
      blocks.back().count += b.count;
    }
  }
  std::size_t i = lo;
  for (const Block& b : blocks) {
    double m = b.mean();
    if (m < lower) m = lower;
    if (m > upper) m = upper;
    for (std::size_t k = 0; k < b.count; ++k) y[i++] = m;
  }
}

}  // namespace detail

/// argmin sum w_i (z_i - y_i)^2 over nondecreasing z with z[idx] = value at every anchor.
inline std::vector<double> isotonic_project(std::vector<double> y, const std::vector<Anchor>& anchors,
                                            const std::vector<double>& weights = {}) {
  const std::size_t n = y.size();
  std::vector<double> w = weights.empty() ? std::vector<double>(n, 1.0) : weights;
  if (w.size() != n) throw ParameterError("isotonic_project: weight size mismatch");
  for (double v : w)
    if (!(v > 0.0)) throw ParameterError("isotonic_project: weights must be positive");
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (anchors[k].first > n) throw ParameterError("isotonic_project: anchor index out of range");
    if (!std::isfinite(anchors[k].second)) throw ParameterError("isotonic_project: non-finite anchor");
    if (k > 0) {
      if (anchors[k].first <= anchors[k - 1].first) throw ParameterError("isotonic_project: anchors not sorted");
      if (anchors[k].second < anchors[k - 1].second) throw ParameterError("isotonic_project: infeasible anchors");
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t start = 0;
  double lower = -inf;
  for (const Anchor& a : anchors) {
    detail::pava_segment(y, w, start, a.first, lower, a.second);
    if (a.first < n) y[a.first] = a.second;
    start = a.first + 1;
    lower = a.second;
  }
  if (start < n) detail::pava_segment(y, w, start, n, lower, inf);
  return y;
}

}  // namespace plateau_flow::plateau
