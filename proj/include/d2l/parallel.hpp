#pragma once

#include <cstddef>
#include <functional>

namespace d2l {

// Worker cap for intra-run parallelism: D2L_THREADS if set and positive,
// otherwise the hardware concurrency (at least 1).
std::size_t thread_cap();

// Runs fn(i) for i in [0, n) on up to thread_cap() threads. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace d2l
