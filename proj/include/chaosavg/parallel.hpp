#pragma once

// Index-parallel loops. Work items write to their own slots and reductions
// happen afterwards in index order, so results do not depend on the thread
// count.

#include <cstddef>
#include <functional>

namespace chaosavg {

// 0 means "use CHAOSAVG_THREADS, else hardware concurrency".
void set_thread_count(int n);
int thread_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace chaosavg
