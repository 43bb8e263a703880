#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dwre {

/// Worker count from DWRE_WORKERS, falling back to the hardware thread count.
inline unsigned default_workers() {
  if (const char* env = std::getenv("DWRE_WORKERS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for every i in [0, count). Work is handed out in fixed-size
/// chunks; callers write results into slot i so that the outcome does not
/// depend on the worker count or schedule. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  constexpr std::size_t kChunk = 256;
  workers = std::max(1u, workers);
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  if (workers == 1 || chunks <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::size_t end = std::min(count, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  pool.reserve(n - 1);
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dwre
