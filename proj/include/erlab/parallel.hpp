#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace erlab {

/// Worker count from ERLAB_THREADS, else the hardware concurrency.
inline unsigned default_threads() {
  if (const char* s = std::getenv("ERLAB_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

/// Splits [0, n) into `threads` contiguous chunks and runs
/// body(begin, end, worker) on each. The first exception thrown is rethrown.
template <class Body>
void parallel_chunks(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    body(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t b = n * t / threads, e = n * (t + 1) / threads;
    pool.emplace_back([&, b, e, t] {
      try {
        body(b, e, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

/// Calls body(i) for every i in [0, n).
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  parallel_chunks(n, threads, [&](std::size_t b, std::size_t e, unsigned) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

}  // namespace erlab
