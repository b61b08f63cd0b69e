#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace brw {

// Worker count: BRWLAB_THREADS if set to a positive integer, else the
// hardware concurrency.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("BRWLAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and `chunks`, never on the worker count, so any per-chunk
// reduction the caller performs is independent of scheduling.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunks, unsigned workers, Body&& body) {
  if (n == 0) return;
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  auto bounds = [&](std::size_t c) { return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks}; };
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = bounds(c);
      body(c, b, e);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) {
          auto [b, e] = bounds(c);
          body(c, b, e);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace brw
