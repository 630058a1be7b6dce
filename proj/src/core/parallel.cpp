#include "vocapose/core/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vp::core {

namespace {
int g_threads =
#ifdef _OPENMP
    0;  // 0 = resolve from omp on first use
#else
    1;
#endif
}

void set_num_threads(int n) { g_threads = n < 1 ? 1 : n; }

int num_threads() {
#ifdef _OPENMP
    if (g_threads == 0) g_threads = omp_get_max_threads();
#endif
    return g_threads;
}

}  // namespace vp::core
