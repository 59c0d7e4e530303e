#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace xcorr {

// Runs fn(i) for every i in [0, total) and blocks until done. threads == 0
// means the hardware count. Work items must write to disjoint slots; the
// claim order is unspecified, so determinism has to come from per-index
// state (seeded RNG streams), never from scheduling.
template <class Fn>
void parallel_for(std::size_t total, unsigned threads, Fn&& fn) {
  if (total == 0) return;
  unsigned count = threads != 0 ? threads : std::thread::hardware_concurrency();
  if (count == 0) count = 1;
  if (count > total) count = static_cast<unsigned>(total);
  if (count == 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= total) return;
        fn(i);
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(total, std::memory_order_relaxed);  // drain remaining work
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace xcorr
