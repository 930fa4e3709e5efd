#include "stfl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stfl {

namespace {

std::atomic<std::size_t> g_override{0};

std::size_t env_workers() {
  const char* env = std::getenv("STFL_THREADS");
  if (env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      // fall through to auto
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

std::size_t worker_count() {
  const std::size_t forced = g_override.load();
  if (forced > 0) return forced;
  static const std::size_t from_env = env_workers();
  return from_env;
}

void set_worker_count(std::size_t workers) { g_override.store(workers); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // The first exception thrown by any range is rethrown after all joins.
  std::mutex error_mutex;
  std::exception_ptr error;
  const auto run_range = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  const std::size_t per = (n + workers - 1) / workers;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
      const std::size_t begin = w * per;
      const std::size_t end = std::min(n, begin + per);
      if (begin >= end) break;
      threads.emplace_back(run_range, begin, end);
    }
    run_range(0, std::min(n, per));
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace stfl
