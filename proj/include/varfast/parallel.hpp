#pragma once

#include <cstddef>
#include <functional>

namespace varfast {

// Worker count from VARFAST_THREADS (default 1, clamped to [1, 64]).
std::size_t thread_count();

// Runs body(i) for i in [0, n). Each index must write only its own output
// slot; with that discipline results are identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace varfast
