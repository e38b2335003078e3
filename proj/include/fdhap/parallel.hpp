#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fdhap {

// Worker count: FDHAP_THREADS overrides, otherwise hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("FDHAP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n). Work is chunked over threads; callers make
// results deterministic by writing into per-index slots and reducing in
// index order afterwards.
template <class Fn>
void parallel_for(int n, const Fn& fn) {
  const int workers = std::min(worker_count(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace fdhap
