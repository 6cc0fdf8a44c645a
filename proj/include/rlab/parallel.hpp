#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rlab {

/// Fixed-chunk parallel loops. Chunk boundaries depend only on the problem
/// size and the chunk length, never on the thread count, so any reduction
/// that combines per-chunk partials in chunk order is bit-identical for every
/// `threads` value.
class Executor {
 public:
  explicit Executor(unsigned threads = 1) : threads_(std::max(1u, threads)) {}
  unsigned threads() const { return threads_; }

  static std::size_t chunk_count(std::size_t count, std::size_t chunk) {
    return chunk == 0 ? 0 : (count + chunk - 1) / chunk;
  }

  /// Calls fn(chunk_index, begin, end) for every chunk. Exceptions are
  /// rethrown on the caller; when several chunks fail, the one with the
  /// lowest index wins.
  template <class F>
  void for_chunks(std::size_t count, std::size_t chunk, F&& fn) const {
    const std::size_t n_chunks = chunk_count(count, chunk);
    if (n_chunks == 0) return;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads_, n_chunks));
    if (workers <= 1) {
      for (std::size_t c = 0; c < n_chunks; ++c)
        fn(c, c * chunk, std::min(count, (c + 1) * chunk));
      return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::size_t err_chunk = n_chunks;
    auto work = [&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        try {
          fn(c, c * chunk, std::min(count, (c + 1) * chunk));
        } catch (...) {
          std::lock_guard lk(err_mu);
          if (c < err_chunk) {
            err_chunk = c;
            err = std::current_exception();
          }
        }
      }
    };
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers - 1);
      for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
      work();
    }
    if (err) std::rethrow_exception(err);
  }

 private:
  unsigned threads_;
};

}  // namespace rlab
