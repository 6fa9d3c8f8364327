#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace plateau_flow {

/// Worker count, capped by PLATEAU_FLOW_THREADS when set.
inline unsigned worker_count() {
  static const unsigned count = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PLATEAU_FLOW_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
    }
    return hw;
  }();
  return count;
}

/// Runs fn(i) for i in [0, n). Each index must write only its own output slot;
/// reductions happen afterwards in fixed order, so results do not depend on
/// the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 1024) {
  const std::size_t blocks = (n + grain - 1) / grain;
  const std::size_t workers = std::min<std::size_t>(worker_count(), blocks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace plateau_flow
