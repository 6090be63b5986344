#pragma once

#include <cstddef>
#include <functional>

namespace ptrap {

/// Worker count: PLANAR_TRAP_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned thread_count();

/// Calls fn(begin, end) on contiguous chunks covering [0, n). Each index is
/// visited exactly once, so results written per index are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace ptrap
