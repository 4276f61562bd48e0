#pragma once

#include <cstddef>
#include <functional>

namespace ctrvis {

/// Runs fn(0..n-1) on up to `workers` threads (0: hardware concurrency).
/// Indices are claimed in order; the first exception is rethrown after all
/// workers stop.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace ctrvis
