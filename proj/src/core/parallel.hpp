#pragma once

#include <cstddef>
#include <functional>

namespace bsqz::parallel {

/// Caps the number of worker threads used by the library (0 = hardware concurrency).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; fn must only
/// write state owned by index i, which keeps results independent of the thread count.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace bsqz::parallel
