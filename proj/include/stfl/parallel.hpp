#pragma once

#include <cstddef>
#include <functional>

namespace stfl {

/// Worker cap from STFL_THREADS (0 or unset means hardware concurrency).
std::size_t worker_count();

/// Overrides the worker cap for the remainder of the process (0 restores auto).
void set_worker_count(std::size_t workers);

/// Runs fn(i) for i in [0, n). Iterations are split into contiguous ranges,
/// one per worker; fn must only write state owned by its index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace stfl
