#ifndef ANRSP_PARALLEL_HPP
#define ANRSP_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace anrsp {

/// Number of workers used by parallel_for; 0 means hardware concurrency.
inline std::size_t& worker_count_override() {
  static std::size_t count = 0;
  return count;
}

inline std::size_t worker_count() {
  std::size_t w = worker_count_override();
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

/// Runs body(i, worker) for i in [0, count) over contiguous static chunks.
/// Each index is visited exactly once, so bodies that write only their own
/// output slot give results independent of the worker count. The first
/// exception thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i, std::size_t{0});
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end, w] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i, w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace anrsp

#endif  // ANRSP_PARALLEL_HPP
