#pragma once

#include <cstddef>
#include <functional>

namespace dctdet {

// Worker count used by parallel_for. Initialized from DCTDET_THREADS when set,
// otherwise from the hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
// so results never depend on the worker count as long as body(i) only writes
// state owned by i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dctdet
