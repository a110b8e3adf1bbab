#pragma once

namespace pcdvq {

// Worker count for the OpenMP kernels. The programmatic override wins outright
// (tests oversubscribe with it); otherwise omp_get_max_threads() capped by the
// PCDVQ_THREADS env var. Always >= 1. All parallel loops in the library write
// disjoint slots, so results never depend on this value.
int thread_count();

// n <= 0 clears the override.
void set_thread_override(int n);

}  // namespace pcdvq
