#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "accelmc/brownian.hpp"
#include "accelmc/models.hpp"
#include "accelmc/path.hpp"

namespace accelmc {

// Raised when a scheme step produces a non-finite state component.
struct SchemeExplosionError : std::runtime_error {
  std::int64_t step;
  SchemeExplosionError(const std::string& label, std::int64_t step_)
      : std::runtime_error("scheme '" + label +
                           "' exploded at step " + std::to_string(step_)),
        step(step_) {}
};

// Explicit Euler-Maruyama on the lattice grid. x0 empty means the model's
// initial state. Reads every lattice entry exactly once, step-major.
SchemePath euler_maruyama(const SdeModel& model, double eps,
                          const IncrementLattice& lattice,
                          std::span<const double> x0 = {});

// Milstein for one-factor models carrying a correction; adds
// 0.5 * (sigma sigma')(x, eps) * (dB^2 - dt) on top of the Euler update.
// Rejects models without a correction or with more than one factor.
SchemePath milstein(const SdeModel& model, double eps,
                    const IncrementLattice& lattice,
                    std::span<const double> x0 = {});

// X_bar(eps) - X_bar(0) + X(0) with both discretizations on the given
// lattice and the exact base path supplied on this grid or a refinement of
// it. At eps = 0 the two runs cancel exactly and the base path is returned
// bit-for-bit.
SchemePath accelerated_em(const SdeModel& model, double eps,
                          const IncrementLattice& lattice,
                          const SchemePath& base_exact,
                          std::span<const double> x0 = {});

SchemePath accelerated_milstein(const SdeModel& model, double eps,
                                const IncrementLattice& lattice,
                                const SchemePath& base_exact,
                                std::span<const double> x0 = {});

// Price-component hybrid S_bar(eps) - S_bar(0) + S_hat(0): Euler runs of the
// full two-factor model at eps = nu and eps = 0 on the n-point grid plus a
// Milstein run of the constant-variance base driven by factor 0. n must
// divide lattice.n_steps. base_grid_steps = 0 puts the base run on the same
// n-point grid; a larger multiple of n runs it on that finer grid (bounded
// by the lattice resolution) and restricts.
SchemePath sabr_hybrid_tilde(const SabrParams& params,
                             const IncrementLattice& lattice, std::int64_t n,
                             std::int64_t base_grid_steps = 0);

// S_bar(eps) - s0 * (L_bar(0) - L(0)) where L is the unit-initial lognormal
// proxy with vol sqrt(alpha0) * s0^(beta-1): the Euler proxy run and its
// exact counterpart share factor 0 of the lattice.
SchemePath sabr_hybrid_check(const SabrParams& params,
                             const IncrementLattice& lattice, std::int64_t n);

enum class SchemeKind { EulerMaruyama, Milstein };

struct CoupledPair {
  SchemePath fine;
  SchemePath coarse;
};

// Runs the same scheme on the fine lattice and on its k-fold coarsening, so
// both paths see the same Brownian randomness. k = 1 duplicates the fine
// path. With accelerated set, both legs are accelerated and share base_exact
// restricted to their own grids.
CoupledPair coupled_pair(const SdeModel& model, double eps,
                         const IncrementLattice& fine_lattice, std::int64_t k,
                         SchemeKind kind, bool accelerated,
                         const SchemePath* base_exact = nullptr);

}  // namespace accelmc
