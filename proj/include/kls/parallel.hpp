#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kls {

/// Runs fn(block_index, begin, end) over [0, count) split into fixed-size
/// blocks. Block boundaries depend only on count and block_size, never on
/// the thread count, so per-block results combined in block order are
/// bit-identical for any `threads`.
template <class Fn>
void parallel_blocks(std::size_t count, std::size_t block_size, unsigned threads, Fn&& fn) {
  if (count == 0) return;
  block_size = std::max<std::size_t>(block_size, 1);
  const std::size_t blocks = (count + block_size - 1) / block_size;
  const auto run = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    fn(b, begin, std::min(count, begin + block_size));
  };
  threads = std::max(1u, threads);
  if (threads == 1 || blocks == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return;
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b;
        {
          std::lock_guard lock(mutex);
          if (error || next >= blocks) return;
          b = next++;
        }
        try {
          run(b);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kls
