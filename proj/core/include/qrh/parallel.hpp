#pragma once

#include <cstddef>
#include <functional>

namespace qrh {

/// Number of worker threads used by the library. Reads `QRH_WORKERS` from the
/// environment; defaults to the hardware concurrency. Never less than 1.
std::size_t worker_count();

/// Overrides the worker count for the current process (0 restores the
/// environment/default behaviour). Results never depend on this value.
void set_worker_count(std::size_t workers);

/// Runs `body(begin, end)` over contiguous chunks of [0, n). Chunks are
/// disjoint; the callable must only write to per-index outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace qrh
