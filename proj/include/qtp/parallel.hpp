#pragma once

#include <algorithm>
#include <atomic>
#include <future>
#include <vector>

namespace qtp {

/// Runs f(0..n-1) on up to `threads` workers. Each index is handled exactly
/// once; callers write results by index, so the output order is fixed.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  const int count = std::min(threads, n);
  for (int t = 0; t < count; ++t)
    workers.push_back(std::async(std::launch::async, [&] {
      for (int i = next++; i < n; i = next++) f(i);
    }));
  for (auto& w : workers) w.get();
}

} // namespace qtp
