#pragma once

#include <cstdint>

namespace accelmc {

// Execution policy for per-path Monte Carlo maps. Parallel runs the body
// under OpenMP when available; Serial is the reference loop kept for tests.
// Bodies write to disjoint per-index slots and all reductions happen
// afterwards in index order, so both policies produce identical bits.
enum class Exec { Serial, Parallel };

// Worker cap for Exec::Parallel; 0 means the OpenMP default. Set once at
// startup (not safe to change while a map is running).
void set_max_threads(int n) noexcept;
int max_threads() noexcept;

namespace detail {
void run_indexed(std::int64_t count, Exec exec, void* ctx,
                 void (*body)(void*, std::int64_t));
}

// Calls body(i) for i in [0, count); chunk scheduling under OpenMP.
template <class Body>
void for_each_path(std::int64_t count, Exec exec, Body&& body) {
  auto trampoline = [](void* ctx, std::int64_t i) {
    (*static_cast<Body*>(ctx))(i);
  };
  detail::run_indexed(count, exec, &body, +trampoline);
}

}  // namespace accelmc
