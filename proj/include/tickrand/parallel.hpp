#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace tickrand {

/// Hardware thread count, at least 1.
inline unsigned default_jobs() { return std::max(1U, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
/// into index-addressed slots, so output never depends on scheduling.
/// The first exception thrown by any task is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (n == 0) return;
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Thread-safe lazily built table keyed by K. Used for the exact null
/// distributions, which are expensive to build and immutable afterwards.
template <typename K, typename V>
class Memo {
 public:
  template <typename Build>
  std::shared_ptr<const V> get(const K& key, Build&& build) {
    std::lock_guard lock(mutex_);
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
    auto value = std::make_shared<const V>(build());
    table_.emplace(key, value);
    return value;
  }

 private:
  std::mutex mutex_;
  std::map<K, std::shared_ptr<const V>> table_;
};

}  // namespace tickrand
