#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace volgram {

/// Worker count: explicit value if given, else $VOLGRAM_JOBS, else hardware concurrency.
unsigned resolve_jobs(std::optional<unsigned> requested);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace volgram
