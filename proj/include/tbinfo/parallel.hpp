#pragma once

#include <cstddef>
#include <functional>

namespace tbinfo {

/// Worker count: TBINFO_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Indices are handed out dynamically; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace tbinfo
