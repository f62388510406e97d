#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "accelmc/models.hpp"
#include "accelmc/parallel.hpp"
#include "accelmc/payoffs.hpp"

namespace accelmc {

// Geometric level grid: level l uses n_l = base^l steps over [0, horizon].
struct LevelSpec {
  int base = 4;
  int max_level = 4;
  double horizon = 1.0;

  LevelSpec() = default;
  LevelSpec(int base_, int max_level_, double horizon_);
  std::int64_t grid_size(int level) const;
};

enum class Estimator { Standard, Accelerated, Localized };
enum class AllocationRule { Paper, CostOptimal };

// One coupled draw of the standard level difference f(X_bar at n_l) -
// f(X_bar at n_{l-1}) on a shared lattice; the bare payoff value at level 0.
// Pure in (seed, path_index); distinct levels use disjoint Gaussian streams.
double sample_level_standard(const SdeModel& model, double eps,
                             const Payoff& payoff, int level,
                             const LevelSpec& spec, std::uint64_t seed,
                             std::uint64_t path_index);

// Control-variate draw: at level 0, f(X_bar(eps)) - f(X_bar(0)) +
// base_expectation; at higher levels the level difference of
// f(X_bar(eps)) - f(X_bar(0)) (the analytic term cancels).
double sample_level_new(const SdeModel& model, double eps,
                        const Payoff& payoff, double base_expectation,
                        int level, const LevelSpec& spec, std::uint64_t seed,
                        std::uint64_t path_index);

// Localized variant: the smooth part rides the control variate, the
// irregular remainder stays on the plain coupled estimator, both on the same
// paths: per leg the draw is f(X_bar(eps)) - f_s(X_bar(0)), plus
// E[f_s(X_T at eps=0)] once at level 0.
double sample_level_localized(const SdeModel& model, double eps,
                              const LocalizedPayoff& payoff,
                              double base_expectation_smooth, int level,
                              const LevelSpec& spec, std::uint64_t seed,
                              std::uint64_t path_index);

// Per-level sample counts meeting the variance budget target_rmse^2 / 2.
// Paper: N_l = ceil(2 (L+1) gamma^-2 max(V_0 / n_l, V_l)) (the max keeps the
// budget honored for variance profiles decaying slower than 1/n).
// CostOptimal: N_l = ceil(2 gamma^-2 sqrt(V_l / n_l) sum_m sqrt(V_m n_m)).
// Every level gets at least 2 samples.
std::vector<std::int64_t> allocate_samples(
    std::span<const double> level_variances, const LevelSpec& spec,
    double target_rmse, AllocationRule rule = AllocationRule::CostOptimal);

// ceil(log(1/target_rmse) / log(base)) + offset, floored at 0.
int suggest_max_level(double target_rmse, int base, int offset = 0);

struct LevelStats {
  int level = 0;
  double mean_delta = 0.0;
  double var_delta = 0.0;
  std::int64_t samples = 0;     // valid draws contributing to the stats
  std::int64_t exclusions = 0;  // exploded draws, never silently dropped
  double cost = 0.0;            // samples * grid_size(level)
};

struct MlmcReport {
  std::vector<LevelStats> levels;
  double total_estimate = 0.0;   // sum of level means
  double total_std_error = 0.0;  // sqrt(sum var_l / N_l)
  double total_cost = 0.0;
  std::string estimator_label;
  std::int64_t pilot_size = 0;
};

// Pilot pass on path indices [0, pilot_size) estimates level variances,
// allocate_samples sizes the main pass, which runs on disjoint indices
// [pilot_size, pilot_size + N_l) and alone feeds the reported statistics.
// Accelerated needs a finite base_expectation; Standard ignores it. For the
// Localized estimator use the LocalizedPayoff overload.
MlmcReport run_mlmc(const SdeModel& model, double eps, const Payoff& payoff,
                    double base_expectation, const LevelSpec& spec,
                    double target_rmse, Estimator estimator,
                    std::uint64_t seed, std::int64_t pilot_size = 2000,
                    AllocationRule rule = AllocationRule::CostOptimal,
                    Exec exec = Exec::Parallel);

MlmcReport run_mlmc(const SdeModel& model, double eps,
                    const LocalizedPayoff& payoff,
                    double base_expectation_smooth, const LevelSpec& spec,
                    double target_rmse, std::uint64_t seed,
                    std::int64_t pilot_size = 2000,
                    AllocationRule rule = AllocationRule::CostOptimal,
                    Exec exec = Exec::Parallel);

struct LevelDiagRow {
  int level = 0;
  std::string estimator;
  double mean_delta = 0.0;  // signed level-difference mean
  double std_delta = 0.0;
  std::int64_t samples = 0;
  std::int64_t exclusions = 0;
};

// Fixed-size per-level study of the standard and accelerated estimators (and
// the localized one when a split is supplied) on shared lattices, so the
// per-level comparisons are paired draw by draw. samples_per_level >= 1000.
std::vector<LevelDiagRow> level_diagnostics(
    const SdeModel& model, double eps, const Payoff& payoff,
    const LocalizedPayoff* localized, double base_expectation,
    double base_expectation_smooth, const LevelSpec& spec,
    std::int64_t samples_per_level, std::uint64_t seed,
    Exec exec = Exec::Parallel);

}  // namespace accelmc
