#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mblw {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Work items are
/// claimed dynamically, so fn must write only to slot-owned state. If any
/// call throws, the exception of the lowest failing index is rethrown after
/// all threads have joined.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t n_threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(count);

  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mblw
