#pragma once

#include <cstddef>
#include <functional>

namespace fsa {

// Process-wide fan-out cap, settable from the CLI --threads flag.
int default_threads();
void set_default_threads(int n);

// Static partition of [0, n) over worker threads; fn(i) must be independent
// of execution order. threads <= 0 means the process default. The first
// worker exception is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace fsa
