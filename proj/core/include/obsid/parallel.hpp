#pragma once

#include <cstddef>
#include <functional>

namespace obsid {

/// Worker count: OBSID_THREADS if set (>= 1), otherwise hardware concurrency.
std::size_t worker_count();

/// Overrides the worker count for the current process (0 restores the default).
void set_worker_count(std::size_t workers);

/// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each,
/// possibly concurrently. Chunking is static, so callers that write results
/// by index and reduce afterwards in index order are schedule-independent.
/// Nested calls from inside a worker run serially on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace obsid
