#pragma once

#include <cstddef>
#include <functional>

namespace mssr {

// Number of threads compute kernels may use. Defaults to the hardware
// concurrency, capped by the MSSRNET_THREADS environment variable when set.
int max_threads();

// Override the thread cap at runtime (mainly for tests). count < 1 means 1.
void set_max_threads(int count);

// Runs fn(begin, end) over a contiguous partition of [0, items). Work is
// split into per-thread chunks; chunks never overlap, so writers to disjoint
// outputs need no synchronization. Results must not depend on the partition.
// Re-entrant calls from inside a chunk run sequentially.
void parallel_chunks(std::size_t items, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mssr
