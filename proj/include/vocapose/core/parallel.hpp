#pragma once

#include <cstdint>

namespace vp::core {

// Global worker count for the OpenMP kernels. 1 = serial. Every kernel
// assigns each output element to exactly one thread, so results are bitwise
// identical for any thread count.
void set_num_threads(int n);
int num_threads();

template <typename Fn>
void parallel_for(int64_t n, Fn&& fn) {
    if (num_threads() <= 1 || n < 2) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace vp::core
