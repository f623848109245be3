#pragma once

#include <cstddef>
#include <functional>

namespace f2f {

// Worker count used by parallel_for. Defaults to the hardware concurrency.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for every i in [0, count). Items are split into contiguous
// blocks, one per worker. Callers must not rely on execution order; any
// reduction across items has to be done afterwards in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace f2f
