#pragma once

#include <cstddef>
#include <functional>

namespace leafwise {

// Number of worker threads used by parallel_for (hardware concurrency, at
// least 1). Overridable through LEAFWISE_THREADS.
unsigned worker_count();

// Calls body(i) for i in [0, count). Each index is processed exactly once;
// callers write results into index-addressed slots and reduce in index order,
// so results do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace leafwise
