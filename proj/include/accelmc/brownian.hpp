#pragma once

#include <cstdint>
#include <vector>

namespace accelmc {

// Equidistant Brownian increment lattice for one sample path. increments is
// step-major: increments[step * n_factors + factor] ~ N(0, dt), independent
// across steps and factors. The (seed, path_index) pair identifies the
// underlying Gaussian stream, so regeneration is exact.
struct IncrementLattice {
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::int64_t n_steps = 0;
  int n_factors = 0;
  double dt = 0.0;
  std::vector<double> increments;

  double operator()(std::int64_t step, int factor) const noexcept {
    return increments[static_cast<std::size_t>(step) * n_factors + factor];
  }
  double total_time() const noexcept {
    return dt * static_cast<double>(n_steps);
  }
};

// Draws the full lattice for one path. Pure in all arguments: same inputs,
// same bits. Draw order is step-major so a path's randomness never depends
// on how many factors a model ends up reading.
IncrementLattice sample_lattice(std::uint64_t seed, std::uint64_t path_index,
                                std::int64_t n_steps, int n_factors,
                                double total_time);

// Aggregates k consecutive fine increments per factor into one coarse
// increment. Sums are formed by recursive halving, so coarsening by 2 twice
// gives bit-identical results to coarsening by 4 directly. k must divide
// n_steps; k = 1 copies.
IncrementLattice coarsen(const IncrementLattice& lattice, std::int64_t k);

// Replaces factor 1 with rho * factor0 + sqrt(1-rho^2) * factor1. Requires
// exactly two factors. Marginal variance per column is preserved.
IncrementLattice mix_correlated(const IncrementLattice& lattice, double rho);

// Copies a single factor column out as a one-factor lattice (for schemes
// driven by one of the factors of a shared lattice).
IncrementLattice select_factor(const IncrementLattice& lattice, int factor);

}  // namespace accelmc
