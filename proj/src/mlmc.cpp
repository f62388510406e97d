#include "accelmc/mlmc.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "accelmc/brownian.hpp"
#include "accelmc/schemes.hpp"

namespace accelmc {

namespace {

constexpr std::uint64_t kLevelShift = 48;  // path indices stay below 2^48

std::uint64_t level_stream(int level, std::uint64_t path_index) {
  if (path_index >= (1ull << kLevelShift))
    throw std::invalid_argument("mlmc: path_index exceeds the stream range");
  return (static_cast<std::uint64_t>(level) << kLevelShift) | path_index;
}

struct DrawRequest {
  bool standard = false;
  bool accelerated = false;
  bool localized = false;
};

struct DrawValues {
  double standard = 0.0;
  double accelerated = 0.0;
  double localized = 0.0;
};

// One coupled draw at a level: fine and k-coarsened lattices share the same
// randomness, the eps = 0 runs reuse the same lattices, and every requested
// estimator is evaluated from the same four terminal values.
DrawValues level_draw(const SdeModel& model, double eps, const Payoff& payoff,
                      const LocalizedPayoff* localized,
                      double base_expectation, double base_expectation_smooth,
                      int level, const LevelSpec& spec, std::uint64_t seed,
                      std::uint64_t path_index, const DrawRequest& req) {
  const std::int64_t n_fine = spec.grid_size(level);
  const IncrementLattice fine =
      sample_lattice(seed, level_stream(level, path_index), n_fine,
                     model.factor_dim, spec.horizon);

  const bool needs_zero = req.accelerated || req.localized;
  const auto terminal0 = [](const SchemePath& p) {
    return p.value(p.n_steps(), 0);
  };

  const double fine_eps = terminal0(euler_maruyama(model, eps, fine));
  const double fine_zero =
      needs_zero ? terminal0(euler_maruyama(model, 0.0, fine)) : 0.0;

  double coarse_eps = 0.0, coarse_zero = 0.0;
  if (level > 0) {
    const IncrementLattice coarse = coarsen(fine, spec.base);
    coarse_eps = terminal0(euler_maruyama(model, eps, coarse));
    if (needs_zero)
      coarse_zero = terminal0(euler_maruyama(model, 0.0, coarse));
  }

  DrawValues out;
  const auto& f = payoff.evaluate;
  if (req.standard) {
    out.standard =
        level == 0 ? f(fine_eps) : f(fine_eps) - f(coarse_eps);
  }
  if (req.accelerated) {
    out.accelerated =
        level == 0
            ? f(fine_eps) - f(fine_zero) + base_expectation
            : (f(fine_eps) - f(fine_zero)) - (f(coarse_eps) - f(coarse_zero));
  }
  if (req.localized) {
    const auto& fs = localized->smooth_part.evaluate;
    const auto& whole = localized->original.evaluate;
    out.localized =
        level == 0
            ? whole(fine_eps) - fs(fine_zero) + base_expectation_smooth
            : (whole(fine_eps) - fs(fine_zero)) -
                  (whole(coarse_eps) - fs(coarse_zero));
  }
  return out;
}

struct SlabStats {
  double mean = 0.0;
  double var = 0.0;
  std::int64_t valid = 0;
  std::int64_t excluded = 0;
};

// Index-ordered Welford pass over a slab where exploded draws are NaN; the
// reduction order never depends on how the slab was filled.
SlabStats reduce_slab(std::span<const double> slab) {
  SlabStats s;
  double m2 = 0.0;
  for (double x : slab) {
    if (std::isnan(x)) {
      ++s.excluded;
      continue;
    }
    ++s.valid;
    const double delta = x - s.mean;
    s.mean += delta / static_cast<double>(s.valid);
    m2 += delta * (x - s.mean);
  }
  s.var = s.valid > 1 ? m2 / static_cast<double>(s.valid - 1) : 0.0;
  return s;
}

// Fills one slab per requested estimator with draws for path indices
// [first, first + count).
void fill_level_slabs(const SdeModel& model, double eps, const Payoff& payoff,
                      const LocalizedPayoff* localized,
                      double base_expectation, double base_expectation_smooth,
                      int level, const LevelSpec& spec, std::uint64_t seed,
                      std::uint64_t first, std::int64_t count,
                      const DrawRequest& req, Exec exec,
                      std::span<double> standard_slab,
                      std::span<double> accelerated_slab,
                      std::span<double> localized_slab) {
  for_each_path(count, exec, [&](std::int64_t i) {
    DrawValues v;
    bool ok = true;
    try {
      v = level_draw(model, eps, payoff, localized, base_expectation,
                     base_expectation_smooth, level, spec, seed,
                     first + static_cast<std::uint64_t>(i), req);
    } catch (const SchemeExplosionError&) {
      ok = false;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (req.standard) standard_slab[i] = ok ? v.standard : nan;
    if (req.accelerated) accelerated_slab[i] = ok ? v.accelerated : nan;
    if (req.localized) localized_slab[i] = ok ? v.localized : nan;
  });
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Standard: return "standard";
    case Estimator::Accelerated: return "accelerated";
    case Estimator::Localized: return "localized";
  }
  return "?";
}

MlmcReport run_mlmc_impl(const SdeModel& model, double eps,
                         const Payoff& payoff,
                         const LocalizedPayoff* localized,
                         double base_expectation,
                         double base_expectation_smooth,
                         const LevelSpec& spec, double target_rmse,
                         Estimator estimator, std::uint64_t seed,
                         std::int64_t pilot_size, AllocationRule rule,
                         Exec exec) {
  if (pilot_size < 100)
    throw std::invalid_argument("run_mlmc: pilot_size must be >= 100");
  if (!(target_rmse > 0.0))
    throw std::invalid_argument("run_mlmc: target_rmse must be positive");
  if (estimator == Estimator::Accelerated && !std::isfinite(base_expectation))
    throw std::invalid_argument(
        "run_mlmc: accelerated estimator needs a finite base expectation");
  if (estimator == Estimator::Localized &&
      !std::isfinite(base_expectation_smooth))
    throw std::invalid_argument(
        "run_mlmc: localized estimator needs a finite smooth-part "
        "expectation");

  DrawRequest req;
  req.standard = estimator == Estimator::Standard;
  req.accelerated = estimator == Estimator::Accelerated;
  req.localized = estimator == Estimator::Localized;

  const int levels = spec.max_level + 1;
  auto slab_for = [&](std::vector<double>& slab,
                      const DrawRequest& r) -> std::array<std::span<double>, 3> {
    return {r.standard ? std::span<double>(slab) : std::span<double>(),
            r.accelerated ? std::span<double>(slab) : std::span<double>(),
            r.localized ? std::span<double>(slab) : std::span<double>()};
  };

  // pilot pass: variances only
  std::vector<double> pilot_var(static_cast<std::size_t>(levels), 0.0);
  {
    std::vector<double> slab(static_cast<std::size_t>(pilot_size));
    for (int l = 0; l < levels; ++l) {
      auto spans = slab_for(slab, req);
      fill_level_slabs(model, eps, payoff, localized, base_expectation,
                       base_expectation_smooth, l, spec, seed, 0, pilot_size,
                       req, exec, spans[0], spans[1], spans[2]);
      const SlabStats stats = reduce_slab(slab);
      if (stats.valid < 2)
        throw std::runtime_error(
            "run_mlmc: pilot pass produced fewer than 2 valid draws at level " +
            std::to_string(l));
      pilot_var[static_cast<std::size_t>(l)] = stats.var;
    }
  }

  const std::vector<std::int64_t> alloc =
      allocate_samples(pilot_var, spec, target_rmse, rule);

  MlmcReport report;
  report.estimator_label = estimator_name(estimator);
  report.pilot_size = pilot_size;

  double var_sum = 0.0;
  for (int l = 0; l < levels; ++l) {
    const std::int64_t n_l = alloc[static_cast<std::size_t>(l)];
    std::vector<double> slab(static_cast<std::size_t>(n_l));
    auto spans = slab_for(slab, req);
    fill_level_slabs(model, eps, payoff, localized, base_expectation,
                     base_expectation_smooth, l, spec, seed,
                     static_cast<std::uint64_t>(pilot_size), n_l, req, exec,
                     spans[0], spans[1], spans[2]);
    const SlabStats stats = reduce_slab(slab);
    if (stats.valid < 2)
      throw std::runtime_error(
          "run_mlmc: main pass produced fewer than 2 valid draws at level " +
          std::to_string(l));

    LevelStats row;
    row.level = l;
    row.mean_delta = stats.mean;
    row.var_delta = stats.var;
    row.samples = stats.valid;
    row.exclusions = stats.excluded;
    row.cost = static_cast<double>(stats.valid) *
               static_cast<double>(spec.grid_size(l));
    report.levels.push_back(row);

    report.total_estimate += stats.mean;
    var_sum += stats.var / static_cast<double>(stats.valid);
    report.total_cost += row.cost;
  }
  report.total_std_error = std::sqrt(var_sum);
  return report;
}

}  // namespace

LevelSpec::LevelSpec(int base_, int max_level_, double horizon_)
    : base(base_), max_level(max_level_), horizon(horizon_) {
  if (base < 2) throw std::invalid_argument("LevelSpec: base must be >= 2");
  if (max_level < 0)
    throw std::invalid_argument("LevelSpec: max_level must be >= 0");
  if (!(horizon > 0.0))
    throw std::invalid_argument("LevelSpec: horizon must be positive");
}

std::int64_t LevelSpec::grid_size(int level) const {
  if (level < 0 || level > max_level)
    throw std::invalid_argument("LevelSpec: level out of range");
  std::int64_t n = 1;
  for (int i = 0; i < level; ++i) n *= base;
  return n;
}

double sample_level_standard(const SdeModel& model, double eps,
                             const Payoff& payoff, int level,
                             const LevelSpec& spec, std::uint64_t seed,
                             std::uint64_t path_index) {
  DrawRequest req;
  req.standard = true;
  return level_draw(model, eps, payoff, nullptr, 0.0, 0.0, level, spec, seed,
                    path_index, req)
      .standard;
}

double sample_level_new(const SdeModel& model, double eps,
                        const Payoff& payoff, double base_expectation,
                        int level, const LevelSpec& spec, std::uint64_t seed,
                        std::uint64_t path_index) {
  DrawRequest req;
  req.accelerated = true;
  return level_draw(model, eps, payoff, nullptr, base_expectation, 0.0, level,
                    spec, seed, path_index, req)
      .accelerated;
}

double sample_level_localized(const SdeModel& model, double eps,
                              const LocalizedPayoff& payoff,
                              double base_expectation_smooth, int level,
                              const LevelSpec& spec, std::uint64_t seed,
                              std::uint64_t path_index) {
  DrawRequest req;
  req.localized = true;
  return level_draw(model, eps, payoff.original, &payoff, 0.0,
                    base_expectation_smooth, level, spec, seed, path_index,
                    req)
      .localized;
}

std::vector<std::int64_t> allocate_samples(
    std::span<const double> level_variances, const LevelSpec& spec,
    double target_rmse, AllocationRule rule) {
  const std::size_t levels = static_cast<std::size_t>(spec.max_level) + 1;
  if (level_variances.size() != levels)
    throw std::invalid_argument(
        "allocate_samples: need one variance per level");
  if (!(target_rmse > 0.0))
    throw std::invalid_argument("allocate_samples: target_rmse must be > 0");
  for (double v : level_variances)
    if (!(v >= 0.0))
      throw std::invalid_argument(
          "allocate_samples: variances must be non-negative");

  const double gamma_sq = target_rmse * target_rmse;
  std::vector<std::int64_t> out(levels, 2);

  if (rule == AllocationRule::Paper) {
    const double v0 = level_variances[0];
    const double factor = 2.0 * static_cast<double>(levels) / gamma_sq;
    for (std::size_t l = 0; l < levels; ++l) {
      const double n_l =
          static_cast<double>(spec.grid_size(static_cast<int>(l)));
      const double v = std::max(v0 / n_l, level_variances[l]);
      const double want = std::ceil(factor * v);
      if (want > 2.0) out[l] = static_cast<std::int64_t>(want);
    }
    return out;
  }

  double sum_root = 0.0;
  for (std::size_t l = 0; l < levels; ++l)
    sum_root += std::sqrt(level_variances[l] *
                          static_cast<double>(
                              spec.grid_size(static_cast<int>(l))));
  for (std::size_t l = 0; l < levels; ++l) {
    const double n_l = static_cast<double>(spec.grid_size(static_cast<int>(l)));
    const double want =
        std::ceil(2.0 / gamma_sq * std::sqrt(level_variances[l] / n_l) *
                  sum_root);
    if (want > 2.0) out[l] = static_cast<std::int64_t>(want);
  }
  return out;
}

int suggest_max_level(double target_rmse, int base, int offset) {
  if (!(target_rmse > 0.0) || base < 2)
    throw std::invalid_argument("suggest_max_level: bad arguments");
  const double raw =
      std::log(1.0 / target_rmse) / std::log(static_cast<double>(base));
  const int l = static_cast<int>(std::ceil(raw)) + offset;
  return l < 0 ? 0 : l;
}

MlmcReport run_mlmc(const SdeModel& model, double eps, const Payoff& payoff,
                    double base_expectation, const LevelSpec& spec,
                    double target_rmse, Estimator estimator,
                    std::uint64_t seed, std::int64_t pilot_size,
                    AllocationRule rule, Exec exec) {
  if (estimator == Estimator::Localized)
    throw std::invalid_argument(
        "run_mlmc: the localized estimator needs a LocalizedPayoff");
  return run_mlmc_impl(model, eps, payoff, nullptr, base_expectation, 0.0,
                       spec, target_rmse, estimator, seed, pilot_size, rule,
                       exec);
}

MlmcReport run_mlmc(const SdeModel& model, double eps,
                    const LocalizedPayoff& payoff,
                    double base_expectation_smooth, const LevelSpec& spec,
                    double target_rmse, std::uint64_t seed,
                    std::int64_t pilot_size, AllocationRule rule, Exec exec) {
  return run_mlmc_impl(model, eps, payoff.original, &payoff, 0.0,
                       base_expectation_smooth, spec, target_rmse,
                       Estimator::Localized, seed, pilot_size, rule, exec);
}

std::vector<LevelDiagRow> level_diagnostics(
    const SdeModel& model, double eps, const Payoff& payoff,
    const LocalizedPayoff* localized, double base_expectation,
    double base_expectation_smooth, const LevelSpec& spec,
    std::int64_t samples_per_level, std::uint64_t seed, Exec exec) {
  if (samples_per_level < 1000)
    throw std::invalid_argument(
        "level_diagnostics: needs at least 1000 samples per level");

  DrawRequest req;
  req.standard = true;
  req.accelerated = true;
  req.localized = localized != nullptr;

  std::vector<LevelDiagRow> rows;
  std::vector<double> std_slab(static_cast<std::size_t>(samples_per_level));
  std::vector<double> acc_slab(static_cast<std::size_t>(samples_per_level));
  std::vector<double> loc_slab(
      req.localized ? static_cast<std::size_t>(samples_per_level) : 0);

  for (int l = 0; l <= spec.max_level; ++l) {
    fill_level_slabs(model, eps, payoff, localized, base_expectation,
                     base_expectation_smooth, l, spec, seed, 0,
                     samples_per_level, req, exec, std_slab, acc_slab,
                     loc_slab);
    const auto emit = [&](const char* name, std::span<const double> slab) {
      const SlabStats stats = reduce_slab(slab);
      LevelDiagRow row;
      row.level = l;
      row.estimator = name;
      row.mean_delta = stats.mean;
      row.std_delta = std::sqrt(stats.var);
      row.samples = stats.valid;
      row.exclusions = stats.excluded;
      rows.push_back(row);
    };
    emit("standard", std_slab);
    emit("accelerated", acc_slab);
    if (req.localized) emit("localized", loc_slab);
  }
  return rows;
}

}  // namespace accelmc
