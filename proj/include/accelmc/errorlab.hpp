#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "accelmc/path.hpp"

namespace accelmc {

// One Monte Carlo error measurement at grid size n. wall_time_ms is kept for
// in-process reporting; CSV emission zeroes it so output bodies stay a pure
// function of (config, seed).
struct ErrorRow {
  std::int64_t n = 0;
  std::string label;
  double error = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  double wall_time_ms = 0.0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;  // kept sorted by (label, n)
};

struct LpEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

enum class ErrorMode { Terminal, SupOnGrid };

// (E |d|^p)^(1/p) over precomputed per-pair distances, with the delta-method
// standard error (1/p) m^(1/p - 1) * se(m), m the p-th moment estimate.
LpEstimate lp_norm_estimate(std::span<const double> abs_diffs, double p);

// Strong error from paired terminal values.
LpEstimate strong_error(std::span<const double> reference,
                        std::span<const double> approx, double p);

// Strong error from paired paths. Terminal compares component `component` at
// the horizon; SupOnGrid takes the per-pair maximum over the approx path's
// own grid points (which the reference grid must contain).
LpEstimate strong_error(std::span<const SchemePath> reference,
                        std::span<const SchemePath> approx, double p,
                        ErrorMode mode, int component = 0);

struct RateFit {
  double slope = 0.0;      // d log2(error) / d log2(n)
  double intercept = 0.0;  // log2(error) at log2(n) = 0
  double r_squared = 1.0;
};

// Least squares of log2(error) on log2(n); needs >= 3 rows with distinct n
// and positive errors.
RateFit fit_rate(std::span<const std::int64_t> n_values,
                 std::span<const double> errors);

struct RatioRow {
  std::int64_t n = 0;
  double percent = 0.0;    // 100 * candidate / reference
  double std_error = 0.0;  // first-order propagation, treated as independent
};

// Per-n candidate/reference error ratio in percent. Tables must cover the
// same grid sizes; a zero reference error is flagged as an error rather than
// silently propagating infinities.
std::vector<RatioRow> error_ratio(const ErrorTable& reference,
                                  const ErrorTable& candidate);

struct WeakEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// mean(a - b) + known_constant with the paired-sample standard error.
WeakEstimate weak_error(std::span<const double> samples_a,
                        std::span<const double> samples_b,
                        double known_constant);

struct RhoEstimate {
  double raw = 0.0;      // unclamped least-squares weight
  double clamped = 0.0;  // raw clipped to [0, 2]
};

// Least-squares control-variate weight sum((f_ref - f_bar)(g - g_bar)) /
// sum((g_bar - g)^2) from quadruples (f_ref, f_bar, g, g_bar); the exact
// minimizer of the empirical L2 objective. Zero denominator is an error.
RhoEstimate rho_l2(std::span<const double> f_eps_ref,
                   std::span<const double> f_eps_bar,
                   std::span<const double> f0,
                   std::span<const double> f0_bar);

}  // namespace accelmc
