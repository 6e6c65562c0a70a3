#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hmmee::detail {

inline constexpr std::size_t kChunk = 4096;

// Runs fn(chunk_index, begin, end) over fixed-size chunks of [0, n). Chunks are
// assigned round-robin to workers; callers combine per-chunk results in chunk
// order, so sums do not depend on the thread count.
template <class Fn>
void for_chunks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), nchunks);
  auto run = [&](std::size_t w) {
    for (std::size_t c = w; c < nchunks; c += std::max<std::size_t>(workers, 1)) {
      fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    }
  };
  if (workers <= 1) {
    run(0);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t num_chunks(std::size_t n) { return (n + kChunk - 1) / kChunk; }

}  // namespace hmmee::detail
