#pragma once

#include <cstddef>
#include <functional>

namespace quartercast {

/// Worker count from QUARTERCAST_THREADS, else the machine's parallelism.
int default_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers (<= 0 means
/// default_threads()). Results must be written to per-index slots; if any
/// call throws, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace quartercast
