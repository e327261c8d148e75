#pragma once

#include <cstddef>
#include <functional>

namespace psad {

/// Number of worker threads: PSAD_THREADS when set (>= 1), otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs fn(0) .. fn(n-1) over a block partition of worker threads. Callers
/// keep determinism by writing results into per-index slots; any reduction
/// happens afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace psad
