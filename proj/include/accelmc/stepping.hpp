#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "accelmc/models.hpp"
#include "accelmc/schemes.hpp"

namespace accelmc::detail {

// Shared stepping loop for Euler-Maruyama and Milstein, templated on the
// increment accessor inc(step, factor) so tests can instrument reads. Each
// lattice entry is read exactly once per run, step-major, factor ascending.
// values receives (n_steps + 1) * state_dim entries, row 0 = x0.
template <class IncFn>
void run_scheme_loop(const SdeModel& model, double eps, std::int64_t n_steps,
                     double dt, IncFn&& inc, bool use_milstein,
                     std::span<const double> x0, std::vector<double>& values,
                     const std::string& label) {
  const int N = model.state_dim;
  const int d = model.factor_dim;

  values.resize(static_cast<std::size_t>(n_steps + 1) * N);
  std::vector<double> state(x0.begin(), x0.end());
  std::vector<double> b(static_cast<std::size_t>(N));
  std::vector<double> sigma(static_cast<std::size_t>(N) * d);
  std::vector<double> corr(use_milstein ? static_cast<std::size_t>(N) : 0);
  std::vector<double> db(static_cast<std::size_t>(d));

  for (int i = 0; i < N; ++i) values[static_cast<std::size_t>(i)] = state[i];

  for (std::int64_t step = 0; step < n_steps; ++step) {
    for (int j = 0; j < d; ++j) db[static_cast<std::size_t>(j)] = inc(step, j);

    model.drift(state, eps, b);
    model.diffusion(state, eps, sigma);
    if (use_milstein) model.milstein_correction(state, eps, corr);

    for (int i = 0; i < N; ++i) {
      double dx = b[static_cast<std::size_t>(i)] * dt;
      for (int j = 0; j < d; ++j)
        dx += sigma[static_cast<std::size_t>(i) * d + j] *
              db[static_cast<std::size_t>(j)];
      if (use_milstein)
        dx += 0.5 * corr[static_cast<std::size_t>(i)] *
              (db[0] * db[0] - dt);
      state[static_cast<std::size_t>(i)] += dx;
    }
    if (model.post_step) model.post_step(state);

    bool finite = true;
    for (int i = 0; i < N; ++i)
      finite = finite && std::isfinite(state[static_cast<std::size_t>(i)]);
    if (!finite) throw SchemeExplosionError(label, step);

    double* row = values.data() + static_cast<std::size_t>(step + 1) * N;
    for (int i = 0; i < N; ++i) row[i] = state[static_cast<std::size_t>(i)];
  }
}

}  // namespace accelmc::detail
