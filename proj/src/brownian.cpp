#include "accelmc/brownian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "accelmc/rng.hpp"

namespace accelmc {

namespace {

// Recursive halving keeps block sums associative under repeated power-of-two
// coarsening: tree(2k) splits exactly at k, so coarsen-by-2 twice and
// coarsen-by-4 build the identical expression tree.
double tree_sum(const double* base, std::int64_t count, std::int64_t stride) {
  if (count == 1) return *base;
  const std::int64_t half = count / 2;
  return tree_sum(base, half, stride) +
         tree_sum(base + half * stride, count - half, stride);
}

}  // namespace

IncrementLattice sample_lattice(std::uint64_t seed, std::uint64_t path_index,
                                std::int64_t n_steps, int n_factors,
                                double total_time) {
  if (n_steps <= 0)
    throw std::invalid_argument("sample_lattice: n_steps must be positive");
  if (n_factors <= 0)
    throw std::invalid_argument("sample_lattice: n_factors must be positive");
  if (!(total_time > 0.0))
    throw std::invalid_argument("sample_lattice: total_time must be positive");

  IncrementLattice lat;
  lat.seed = seed;
  lat.path_index = path_index;
  lat.n_steps = n_steps;
  lat.n_factors = n_factors;
  lat.dt = total_time / static_cast<double>(n_steps);
  lat.increments.resize(static_cast<std::size_t>(n_steps) * n_factors);

  GaussianStream stream(seed, path_index);
  stream.fill(lat.increments, 0);
  const double scale = std::sqrt(lat.dt);
  for (double& z : lat.increments) z *= scale;
  return lat;
}

IncrementLattice coarsen(const IncrementLattice& lattice, std::int64_t k) {
  if (k <= 0) throw std::invalid_argument("coarsen: k must be positive");
  if (lattice.n_steps % k != 0)
    throw std::invalid_argument("coarsen: k=" + std::to_string(k) +
                                " does not divide n_steps=" +
                                std::to_string(lattice.n_steps));
  if (k == 1) return lattice;

  IncrementLattice out;
  out.seed = lattice.seed;
  out.path_index = lattice.path_index;
  out.n_steps = lattice.n_steps / k;
  out.n_factors = lattice.n_factors;
  out.dt = lattice.dt * static_cast<double>(k);
  out.increments.resize(static_cast<std::size_t>(out.n_steps) *
                        out.n_factors);

  const int d = lattice.n_factors;
  for (std::int64_t step = 0; step < out.n_steps; ++step) {
    for (int f = 0; f < d; ++f) {
      const double* base = lattice.increments.data() +
                           static_cast<std::size_t>(step) * k * d + f;
      out.increments[static_cast<std::size_t>(step) * d + f] =
          tree_sum(base, k, d);
    }
  }
  return out;
}

IncrementLattice mix_correlated(const IncrementLattice& lattice, double rho) {
  if (lattice.n_factors != 2)
    throw std::invalid_argument("mix_correlated: lattice must have 2 factors");
  if (!(rho >= -1.0 && rho <= 1.0))
    throw std::invalid_argument("mix_correlated: rho must be in [-1, 1]");

  IncrementLattice out = lattice;
  const double rho_c = std::sqrt(1.0 - rho * rho);
  for (std::int64_t step = 0; step < out.n_steps; ++step) {
    const std::size_t i = static_cast<std::size_t>(step) * 2;
    out.increments[i + 1] =
        rho * lattice.increments[i] + rho_c * lattice.increments[i + 1];
  }
  return out;
}

IncrementLattice select_factor(const IncrementLattice& lattice, int factor) {
  if (factor < 0 || factor >= lattice.n_factors)
    throw std::invalid_argument("select_factor: factor out of range");

  IncrementLattice out;
  out.seed = lattice.seed;
  out.path_index = lattice.path_index;
  out.n_steps = lattice.n_steps;
  out.n_factors = 1;
  out.dt = lattice.dt;
  out.increments.resize(static_cast<std::size_t>(lattice.n_steps));
  for (std::int64_t step = 0; step < lattice.n_steps; ++step)
    out.increments[static_cast<std::size_t>(step)] = lattice(step, factor);
  return out;
}

}  // namespace accelmc
