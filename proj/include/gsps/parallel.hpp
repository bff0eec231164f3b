#pragma once

#include <cstddef>
#include <functional>

namespace gsps {

// Worker count: GSPS_THREADS if set, else the hardware concurrency.
int thread_count();

// Run fn(0..count-1) on a work-stealing pool. Tasks must be independent;
// callers key all randomness on the task index so results do not depend on
// scheduling. Nested calls run serially on the caller's thread. The first
// exception thrown by any task is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace gsps
