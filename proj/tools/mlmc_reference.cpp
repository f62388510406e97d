// Brute-force single-level reference price: plain Euler paths of the
// two-factor model on a fixed fine grid, payoff averaged over many samples.
// Slow by design; its (mean, std error) output is frozen into tests as the
// oracle the multi-level estimates are compared against.

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <CLI11.hpp>

#include "accelmc/brownian.hpp"
#include "accelmc/models.hpp"
#include "accelmc/parallel.hpp"
#include "accelmc/payoffs.hpp"
#include "accelmc/schemes.hpp"

int main(int argc, char** argv) {
  CLI::App app{"single-level brute-force reference price"};
  std::int64_t samples = 10000000;
  std::int64_t n_steps = 1024;
  std::uint64_t seed = 9001;
  double strike = 100.0;
  app.add_option("--samples", samples, "Monte Carlo paths");
  app.add_option("--steps", n_steps, "grid steps");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--strike", strike, "call strike");
  CLI11_PARSE(app, argc, argv);

  const accelmc::SabrParams params(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
  const accelmc::SdeModel model = accelmc::sabr_logvol_model(params);
  const accelmc::Payoff payoff = accelmc::european_call(strike);

  std::vector<double> slab(static_cast<std::size_t>(samples));
  accelmc::for_each_path(
      samples, accelmc::Exec::Parallel, [&](std::int64_t j) {
        try {
          const accelmc::IncrementLattice lattice = accelmc::sample_lattice(
              seed, static_cast<std::uint64_t>(j), n_steps, 2,
              params.horizon);
          const accelmc::SchemePath path =
              accelmc::euler_maruyama(model, params.nu, lattice);
          slab[static_cast<std::size_t>(j)] =
              payoff.evaluate(path.value(path.n_steps(), 0));
        } catch (const accelmc::SchemeExplosionError&) {
          slab[static_cast<std::size_t>(j)] =
              std::numeric_limits<double>::quiet_NaN();
        }
      });

  double mean = 0.0, m2 = 0.0;
  std::int64_t count = 0, excluded = 0;
  for (double v : slab) {
    if (std::isnan(v)) {
      ++excluded;
      continue;
    }
    ++count;
    const double d = v - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (v - mean);
  }
  const double variance = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  const double std_error =
      count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;

  std::printf("samples %lld (excluded %lld)\n", static_cast<long long>(count),
              static_cast<long long>(excluded));
  std::printf("steps %lld, seed %llu, strike %.17g\n",
              static_cast<long long>(n_steps),
              static_cast<unsigned long long>(seed), strike);
  std::printf("mean %.17g\n", mean);
  std::printf("std_error %.17g\n", std_error);
  return 0;
}
