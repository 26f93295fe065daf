#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace sealvox {

namespace detail {
inline int& thread_count_slot() {
  static int count = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return count;
}
}  // namespace detail

/// Number of worker threads used by every parallel loop in the library.
inline int thread_count() { return detail::thread_count_slot(); }

inline void set_thread_count(int n) {
  detail::thread_count_slot() = n > 0 ? n : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Scoped override of the global thread count.
class ThreadCountGuard {
 public:
  explicit ThreadCountGuard(int n) : previous_(thread_count()) { set_thread_count(n); }
  ~ThreadCountGuard() { set_thread_count(previous_); }
  ThreadCountGuard(const ThreadCountGuard&) = delete;
  ThreadCountGuard& operator=(const ThreadCountGuard&) = delete;

 private:
  int previous_;
};

/// Calls fn(begin, end) over disjoint chunks covering [0, n). Chunks are
/// handed out dynamically; callers must write results by index so the
/// outcome never depends on scheduling.
template <class Fn>
void parallel_for_chunks(std::size_t n, std::size_t grain, Fn&& fn) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = (n + grain - 1) / grain;
  const int workers = static_cast<int>(std::min<std::size_t>(chunks, static_cast<std::size_t>(thread_count())));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      for (;;) {
        const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= chunks) break;
        const std::size_t begin = c * grain;
        fn(begin, std::min(n, begin + grain));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(chunks);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 64) {
  parallel_for_chunks(n, grain, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

/// Fixed-shape pairwise sum: the tree depends only on the input length,
/// so the result is bit-identical for any thread count.
inline double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace sealvox
