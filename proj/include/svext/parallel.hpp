#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace svext {

/// Execution resources. Results never depend on `threads`: work is split
/// into fixed chunks, each with its own RNG substream, and reduced in
/// chunk order.
struct Exec {
  unsigned threads = 1;
};

/// Replicates per Monte Carlo chunk.
inline constexpr std::size_t kChunkSize = std::size_t{1} << 14;

inline std::size_t chunk_count(std::size_t reps) {
  return (reps + kChunkSize - 1) / kChunkSize;
}

/// Calls body(i) for i in [0, count) on up to exec.threads workers.
/// The first exception thrown by any body is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t count, Exec exec, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, exec.threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace svext
