#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace schemamatch {

// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call throws,
// the exception from the lowest index is rethrown after all threads finish,
// so failures are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace schemamatch
