#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace masklab {

inline int default_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs body(i) for i in [0, n). Work items must be independent; each item
/// should write only to its own output slot so results do not depend on
/// scheduling. jobs <= 1 runs inline.
template <class F>
void parallel_for(long n, int jobs, F&& body) {
  if (n <= 0) return;
  if (jobs <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  int workers = static_cast<int>(std::min<long>(jobs, n));
  std::atomic<long> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        long i = cursor.fetch_add(1, std::memory_order_relaxed);
        if (i >= n || failed.load(std::memory_order_relaxed)) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace masklab
