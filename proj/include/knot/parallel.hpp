#pragma once

#include "knot/types.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace knot {

// requested > 0 wins; otherwise KNOTENERGY_THREADS; otherwise the hardware
// count. Results never depend on the answer, only wall time does.
inline int resolve_threads(int requested) {
  if (requested > 0) return std::min(requested, 256);
  if (const char* env = std::getenv("KNOTENERGY_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(std::min(v, 256L));
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Static contiguous block split of [0, n). body(i) must be independent
// across i; which thread runs which block is irrelevant to the output.
template <typename Body>
void parallel_for(Index n, int threads, Body&& body) {
  if (n <= 0) return;
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<Index>(n, 256))));
  if (threads <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  Index chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    Index lo = t * chunk;
    Index hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (Index i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Deterministic reduction: every row is summed in its own fixed inner order
// by row_fn, the per-row results land in a buffer, and the buffer is folded
// serially in ascending row order. Bitwise identical for any worker count.
template <typename Scalar, typename RowFn>
Scalar deterministic_row_sum(Index rows, int threads, RowFn&& row_fn) {
  Vector<Scalar> partial(rows);
  parallel_for(rows, threads, [&](Index i) { partial[i] = row_fn(i); });
  Scalar total = Scalar(0);
  for (Index i = 0; i < rows; ++i) total += partial[i];
  return total;
}

}  // namespace knot
