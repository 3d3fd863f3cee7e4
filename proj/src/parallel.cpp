#include "tem/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tem::parallel {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads()
{
#ifdef _OPENMP
    const int req = g_max_threads.load();
    return req == 0 ? omp_get_max_threads() : req;
#else
    return 1;
#endif
}

bool enabled() { return max_threads() > 1; }

} // namespace tem::parallel
