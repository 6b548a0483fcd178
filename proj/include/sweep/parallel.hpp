#pragma once

#include <cstddef>
#include <functional>

namespace sweep {

/// Worker count: BALAYAGE_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over contiguous blocks on up to
/// thread_count() threads. Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sweep
