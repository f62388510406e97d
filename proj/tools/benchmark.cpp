// Compares the serial reference executor against the OpenMP one on the two
// hot kernels (strong-error study, per-level diagnostics) and checks that
// both produce identical bits.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include <CLI11.hpp>

#include "accelmc/experiments.hpp"
#include "accelmc/mlmc.hpp"
#include "accelmc/parallel.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

bool same_bits(const accelmc::ErrorTable& a, const accelmc::ErrorTable& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (std::memcmp(&a.rows[i].error, &b.rows[i].error, sizeof(double)) != 0)
      return false;
    if (std::memcmp(&a.rows[i].std_error, &b.rows[i].std_error,
                    sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accelmc serial vs parallel benchmark"};
  std::int64_t samples = 2000;
  std::int64_t n_ref = 4096;
  std::int64_t level_samples = 20000;
  int threads = 0;
  app.add_option("--samples", samples, "paths for the strong-error kernel");
  app.add_option("--n-ref", n_ref, "reference grid size");
  app.add_option("--level-samples", level_samples,
                 "paths per level for the MLMC kernel");
  app.add_option("--threads", threads, "worker cap, 0 = OpenMP default");
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) accelmc::set_max_threads(threads);
  const std::int64_t grids[] = {8, 16, 32, 64};
  const accelmc::SabrParams params;

  std::printf("strong-error kernel: %lld paths, n_ref=%lld\n",
              static_cast<long long>(samples), static_cast<long long>(n_ref));
  const auto t0 = std::chrono::steady_clock::now();
  const accelmc::SabrStudy serial = accelmc::run_sabr_study(
      params, grids, n_ref, samples, 2.0, 7, 1, false, accelmc::Exec::Serial);
  const double serial_s = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const accelmc::SabrStudy parallel =
      accelmc::run_sabr_study(params, grids, n_ref, samples, 2.0, 7, 1, false,
                              accelmc::Exec::Parallel);
  const double parallel_s = seconds_since(t1);
  std::printf("  serial    %8.3f s  (%.0f paths/s)\n", serial_s,
              samples / serial_s);
  std::printf("  parallel  %8.3f s  (%.0f paths/s, x%.2f)\n", parallel_s,
              samples / parallel_s, serial_s / parallel_s);
  const bool study_match =
      same_bits(serial.standard_terminal, parallel.standard_terminal) &&
      same_bits(serial.tilde_sup, parallel.tilde_sup);
  std::printf("  bitwise match: %s\n", study_match ? "yes" : "NO");

  const accelmc::SabrParams flat(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
  const accelmc::SdeModel model = accelmc::sabr_logvol_model(flat);
  const accelmc::Payoff call = accelmc::european_call(100.0);
  const double base_mean = accelmc::gbm_call_price(100.0, 100.0, 0.4, 1.0);
  const accelmc::LevelSpec spec(4, 4, 1.0);

  std::printf("mlmc diagnostics kernel: %lld paths/level, levels 0..%d\n",
              static_cast<long long>(level_samples), spec.max_level);
  const auto t2 = std::chrono::steady_clock::now();
  const auto diag_serial = accelmc::level_diagnostics(
      model, flat.nu, call, nullptr, base_mean, base_mean, spec, level_samples,
      7, accelmc::Exec::Serial);
  const double diag_serial_s = seconds_since(t2);
  const auto t3 = std::chrono::steady_clock::now();
  const auto diag_parallel = accelmc::level_diagnostics(
      model, flat.nu, call, nullptr, base_mean, base_mean, spec, level_samples,
      7, accelmc::Exec::Parallel);
  const double diag_parallel_s = seconds_since(t3);
  std::printf("  serial    %8.3f s\n", diag_serial_s);
  std::printf("  parallel  %8.3f s  (x%.2f)\n", diag_parallel_s,
              diag_serial_s / diag_parallel_s);
  bool diag_match = diag_serial.size() == diag_parallel.size();
  for (std::size_t i = 0; diag_match && i < diag_serial.size(); ++i)
    diag_match = std::memcmp(&diag_serial[i].mean_delta,
                             &diag_parallel[i].mean_delta, sizeof(double)) == 0 &&
                 std::memcmp(&diag_serial[i].std_delta,
                             &diag_parallel[i].std_delta, sizeof(double)) == 0;
  std::printf("  bitwise match: %s\n", diag_match ? "yes" : "NO");

  return study_match && diag_match ? 0 : 1;
}
