#include "accelmc/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace accelmc {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) noexcept { g_max_threads = n < 0 ? 0 : n; }

int max_threads() noexcept {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {

void run_indexed(std::int64_t count, Exec exec, void* ctx,
                 void (*body)(void*, std::int64_t)) {
#ifdef _OPENMP
  if (exec == Exec::Parallel) {
    const int threads = max_threads();
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) body(ctx, i);
    return;
  }
#else
  (void)exec;
#endif
  for (std::int64_t i = 0; i < count; ++i) body(ctx, i);
}

}  // namespace detail

}  // namespace accelmc
