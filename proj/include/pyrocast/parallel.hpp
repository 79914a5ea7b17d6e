#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace pyrocast {

// Static row partition across threads. Work items must be independent and
// write to disjoint outputs, so results do not depend on the thread count.
inline void parallel_for(long n, int threads,
                         const std::function<void(long, long)>& chunk) {
  if (threads <= 1 || n < 2) {
    chunk(0, n);
    return;
  }
  const int workers = static_cast<int>(
      std::min<long>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const long per = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * per;
    const long hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&chunk, lo, hi] { chunk(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace pyrocast
