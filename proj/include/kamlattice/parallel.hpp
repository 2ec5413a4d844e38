#pragma once

#include <cstddef>
#include <functional>

namespace kamlattice {

/// Worker count: KAMLATTICE_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Splits [0, count) into contiguous chunks whose boundaries are multiples of
/// `align`, and runs fn(begin, end) on up to thread_count() threads.
void parallel_chunks(std::size_t count, std::size_t align,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace kamlattice
