#pragma once

// Deterministic worker pool: results come back in task order whatever the
// number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "casilift/errors.hpp"

namespace casilift {

/// Worker count from CASILIFT_WORKERS, falling back to `fallback`.
inline int workers_from_env(int fallback) {
  const char* v = std::getenv("CASILIFT_WORKERS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError("CASILIFT_WORKERS must be a positive integer, got '" + std::string(v) + "'");
  return static_cast<int>(n);
}

/// Applies `fn(i)` for i in [0, n) on up to `workers` threads. If tasks
/// throw, the exception of the lowest failing index is rethrown after all
/// workers stop.
template <class Fn>
auto parallel_map(std::size_t n, int workers, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  if (workers < 1) throw DomainError("parallel_map: workers must be >= 1");
  std::vector<R> results(n);
  if (n == 0) return results;
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  if (count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// Task-list form: results[i] = fn(tasks[i]).
template <class Task, class Fn>
auto parallel_map(const std::vector<Task>& tasks, int workers, Fn&& fn) {
  return parallel_map(tasks.size(), workers, [&](std::size_t i) { return fn(tasks[i]); });
}

}  // namespace casilift
