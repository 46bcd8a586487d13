#pragma once

#include <cstddef>
#include <functional>

namespace mecswarm {

/// Worker count for data-parallel sections. `requested` < 0 defers to the
/// MEC_SWARM_THREADS environment variable (unset -> 1, 0 -> hardware
/// concurrency, otherwise the given cap).
int resolve_thread_count(int requested = -1);

/// Runs fn(i) for i in [0, n), split into contiguous index chunks across
/// workers. fn must only touch state owned by index i; outputs are then
/// identical for every worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = -1);

} // namespace mecswarm
