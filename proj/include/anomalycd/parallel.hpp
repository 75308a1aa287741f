#pragma once

#include <cstddef>
#include <functional>

namespace anomalycd {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into pre-sized slots so the
/// merge order never depends on scheduling. threads <= 1 runs inline.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace anomalycd
