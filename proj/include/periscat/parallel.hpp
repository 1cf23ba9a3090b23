#pragma once

#include <cstddef>
#include <functional>

namespace periscat {

/// Worker count: PERISCAT_THREADS if set, else the hardware concurrency.
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on worker_count() threads. Every index is
/// processed even if some throw; the exception of the lowest failing index
/// is rethrown afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace periscat
