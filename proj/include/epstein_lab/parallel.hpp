#pragma once

#include <cstddef>
#include <functional>

namespace el {

// Worker count: EPSTEIN_LAB_THREADS if set, else hardware concurrency.
unsigned thread_count();

// Runs body(i) for i in [0, n). Each index is visited once; callers write to
// disjoint slots so the result does not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace el
