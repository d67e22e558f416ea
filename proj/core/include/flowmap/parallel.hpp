#pragma once

#include <cstddef>
#include <functional>

namespace flowmap {

/// Worker count: FLOWMAP_THREADS if set, else hardware concurrency.
[[nodiscard]] std::size_t worker_count();

/// Runs fn(i) for i in [0, count). Each index is handled exactly once, so
/// callers that write per-index results get deterministic output.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace flowmap
