#include "pcdvq/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcdvq {

namespace {

std::atomic<int> g_override{0};

int env_cap() {
    static const int cap = [] {
        const char* s = std::getenv("PCDVQ_THREADS");
        if (!s) return 0;
        const long v = std::strtol(s, nullptr, 10);
        return v > 0 ? static_cast<int>(v) : 0;
    }();
    return cap;
}

}  // namespace

int thread_count() {
    if (const int ovr = g_override.load(); ovr > 0) return ovr;
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const int cap = env_cap(); cap > 0 && cap < n) n = cap;
    return n < 1 ? 1 : n;
}

void set_thread_override(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace pcdvq
