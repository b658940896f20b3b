#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rshom {

inline int& worker_count_ref() {
  static int n = static_cast<int>(std::thread::hardware_concurrency());
  return n;
}

/// Process-wide worker count for parallel maps. Each task writes to disjoint
/// data, so results do not depend on the schedule.
inline int worker_count() { return std::max(1, worker_count_ref()); }
inline void set_worker_count(int n) { worker_count_ref() = std::max(1, n); }

/// Parallel map over [0, count): fn(i) called once per index. Exceptions are
/// captured and the first one rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, int nthreads = 0) {
  if (nthreads <= 0) nthreads = worker_count();
  nthreads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(nthreads), count));
  if (nthreads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mtx;
  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mtx);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace rshom
