#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace hiveguard {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc, 1u, 8u));
}

/// Run fn(i) for i in [0,n). Work items must write to disjoint state; under
/// that rule results are identical for any worker count. Exceptions from
/// workers are rethrown (first one wins).
template <typename Fn>
void parallel_for(int64_t n, int workers, Fn&& fn) {
  if (n <= 0) return;
  workers = std::clamp<int64_t>(workers, 1, n);
  if (workers == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;  // written only by the CAS winner, read after join
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  auto body = [&] {
    for (;;) {
      const int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(i);
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true))
          error = std::current_exception();
        return;
      }
    }
  };
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hiveguard
