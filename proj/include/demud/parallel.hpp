#pragma once

#include <cstddef>
#include <functional>

namespace demud {

/// Worker count from DEMUD_THREADS (unset or 0 = hardware concurrency).
std::size_t worker_count();

/// Calls body(begin, end) over disjoint contiguous chunks of [0, n).
/// Each index is visited exactly once; chunking only affects scheduling,
/// so per-index results must not depend on which chunk handles them.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 16);

}  // namespace demud
