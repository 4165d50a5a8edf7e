#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace padic {

// PADIC_WORKERS overrides the pool size; 1 forces serial execution.
inline unsigned worker_count() {
  if (const char* s = std::getenv("PADIC_WORKERS")) {
    int v = std::atoi(s);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::min(16u, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n) on a bounded pool. Work is handed out in
/// fixed chunks; callers write results by index so output order never
/// depends on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::uint64_t n, Fn&& fn, std::uint64_t chunk = 1024) {
  unsigned w = worker_count();
  if (w <= 1 || n <= chunk) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    try {
      for (;;) {
        std::uint64_t lo = next.fetch_add(chunk);
        if (lo >= n) return;
        std::uint64_t hi = std::min(n, lo + chunk);
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lk(err_mu);
      if (!err) err = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  unsigned t = static_cast<unsigned>(std::min<std::uint64_t>(w, (n + chunk - 1) / chunk));
  for (unsigned i = 1; i < t; ++i) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace padic
