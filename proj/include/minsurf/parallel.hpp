#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace minsurf {

namespace detail {
inline std::atomic<int> g_thread_count{1};
}

inline void set_thread_count(int n) { detail::g_thread_count = std::max(1, n); }
inline int thread_count() { return detail::g_thread_count.load(); }

/// Fork-join loop over [0, n) in contiguous chunks. Callers write to disjoint
/// slots, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(n / 256, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace minsurf
