#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

// Deterministic block-parallel loops. Work is split into contiguous index
// blocks so results never depend on scheduling order.

namespace acst {

inline int default_threads() {
  if (const char* env = std::getenv("ACST_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

inline int& thread_cap() {
  static int cap = default_threads();
  return cap;
}

inline void set_thread_cap(int n) { thread_cap() = std::max(1, n); }

// fn(begin, end) over contiguous blocks
inline void parallel_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                            int threads = 0) {
  if (threads <= 0) threads = thread_cap();
  threads = static_cast<int>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1 || n < 2) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back(fn, b, e);
  }
  for (auto& th : pool) th.join();
}

// fn(i) for each i
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         int threads = 0) {
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  }, threads);
}

}  // namespace acst
