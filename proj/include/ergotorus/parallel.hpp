#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ergotorus {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Deterministic block-parallel map: indices [0,count) are split into
// fixed-size blocks, workers claim blocks dynamically, and per-block results
// are returned in block order. Reductions over the returned vector therefore
// do not depend on the thread count. BlockFn: (block_index, begin, end) -> R.
template <class R, class BlockFn>
std::vector<R> run_blocks(std::size_t count, std::size_t block_size, int threads,
                          BlockFn&& fn) {
  if (block_size == 0) block_size = 1;
  const std::size_t nblocks = (count + block_size - 1) / block_size;
  std::vector<R> results(nblocks);
  if (nblocks == 0) return results;
  int nthreads = resolve_threads(threads);
  if (nthreads > static_cast<int>(nblocks)) nthreads = static_cast<int>(nblocks);

  if (nthreads <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) {
      std::size_t lo = b * block_size;
      std::size_t hi = lo + block_size < count ? lo + block_size : count;
      results[b] = fn(b, lo, hi);
    }
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(nblocks);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
        if (b >= nblocks) return;
        std::size_t lo = b * block_size;
        std::size_t hi = lo + block_size < count ? lo + block_size : count;
        try {
          results[b] = fn(b, lo, hi);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  // rethrow the lowest-block failure, matching what the serial path raises
  for (std::size_t b = 0; b < nblocks; ++b)
    if (errors[b]) std::rethrow_exception(errors[b]);
  return results;
}

}  // namespace ergotorus
