#ifndef FACEATTR_PARALLEL_HPP
#define FACEATTR_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace faceattr {

/// Runs fn(i) for i in [0, n) across at most `workers` threads.
///
/// Indices are split into contiguous chunks, so as long as fn(i) writes only
/// to slot i the result is identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  std::size_t nthreads =
      std::min<std::size_t>(std::max(workers, 1), n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (std::size_t t = 0; t < nthreads; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(begin + chunk, n);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace faceattr

#endif
