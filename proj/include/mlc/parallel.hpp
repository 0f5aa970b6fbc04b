#pragma once

#include "mlc/types.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mlc {

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so per-index outputs do not depend on the thread count.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const Index workers = std::min<Index>(std::max(1, threads), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    const Index chunk = (n + workers - 1) / workers;
    for (Index w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (Index i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mlc
