#include "accelmc/schemes.hpp"

#include <cmath>
#include <stdexcept>

#include "accelmc/stepping.hpp"

namespace accelmc {

namespace {

std::span<const double> pick_x0(const SdeModel& model,
                                std::span<const double> x0) {
  if (x0.empty()) return {model.initial_state};
  if (static_cast<int>(x0.size()) != model.state_dim)
    throw std::invalid_argument("scheme: x0 size does not match state_dim");
  return x0;
}

SchemePath run_scheme(const SdeModel& model, double eps,
                      const IncrementLattice& lattice, bool use_milstein,
                      std::span<const double> x0, const char* label) {
  if (lattice.n_factors != model.factor_dim)
    throw std::invalid_argument(
        "scheme: lattice factor count does not match the model");
  if (use_milstein) {
    if (model.factor_dim != 1)
      throw std::invalid_argument(
          "milstein: only one-factor models are supported");
    if (!model.has_milstein())
      throw std::invalid_argument(
          "milstein: model '" + model.label + "' carries no correction term");
  }

  SchemePath path;
  path.state_dim = model.state_dim;
  path.scheme_label = label;
  path.eps = eps;

  const std::int64_t n = lattice.n_steps;
  path.grid_times.resize(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i)
    path.grid_times[static_cast<std::size_t>(i)] =
        static_cast<double>(i) * lattice.dt;

  const auto start = pick_x0(model, x0);
  detail::run_scheme_loop(
      model, eps, n, lattice.dt,
      [&lattice](std::int64_t step, int j) { return lattice(step, j); },
      use_milstein, start, path.values, path.scheme_label);
  return path;
}

// Restriction of the supplied base path to this lattice's grid, with grid
// compatibility checks (step count multiple, matching horizon).
SchemePath base_on_grid(const SchemePath& base_exact,
                        const IncrementLattice& lattice, int state_dim) {
  if (base_exact.state_dim != state_dim)
    throw std::invalid_argument(
        "accelerated scheme: base path state_dim does not match the model");
  const std::int64_t m = base_exact.n_steps();
  if (m % lattice.n_steps != 0)
    throw std::invalid_argument(
        "accelerated scheme: base path grid does not contain the lattice "
        "grid");
  const double t_base = base_exact.grid_times.back();
  const double t_lat = lattice.total_time();
  if (std::abs(t_base - t_lat) > 1e-9 * std::max(1.0, std::abs(t_lat)))
    throw std::invalid_argument(
        "accelerated scheme: base path horizon does not match the lattice");
  return restrict_to_grid(base_exact, lattice.n_steps);
}

SchemePath combine_accelerated(const SchemePath& at_eps,
                               const SchemePath& at_zero,
                               const SchemePath& base, const char* label,
                               double eps) {
  SchemePath out = at_eps;
  out.scheme_label = label;
  out.eps = eps;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = at_eps.values[i] - at_zero.values[i] + base.values[i];
  return out;
}

}  // namespace

SchemePath euler_maruyama(const SdeModel& model, double eps,
                          const IncrementLattice& lattice,
                          std::span<const double> x0) {
  return run_scheme(model, eps, lattice, false, x0, "euler_maruyama");
}

SchemePath milstein(const SdeModel& model, double eps,
                    const IncrementLattice& lattice,
                    std::span<const double> x0) {
  return run_scheme(model, eps, lattice, true, x0, "milstein");
}

SchemePath accelerated_em(const SdeModel& model, double eps,
                          const IncrementLattice& lattice,
                          const SchemePath& base_exact,
                          std::span<const double> x0) {
  const SchemePath base = base_on_grid(base_exact, lattice, model.state_dim);
  const SchemePath at_eps = euler_maruyama(model, eps, lattice, x0);
  const SchemePath at_zero = euler_maruyama(model, 0.0, lattice, x0);
  return combine_accelerated(at_eps, at_zero, base, "accelerated_em", eps);
}

SchemePath accelerated_milstein(const SdeModel& model, double eps,
                                const IncrementLattice& lattice,
                                const SchemePath& base_exact,
                                std::span<const double> x0) {
  const SchemePath base = base_on_grid(base_exact, lattice, model.state_dim);
  const SchemePath at_eps = milstein(model, eps, lattice, x0);
  const SchemePath at_zero = milstein(model, 0.0, lattice, x0);
  return combine_accelerated(at_eps, at_zero, base, "accelerated_milstein",
                             eps);
}

SchemePath sabr_hybrid_tilde(const SabrParams& params,
                             const IncrementLattice& lattice, std::int64_t n,
                             std::int64_t base_grid_steps) {
  if (lattice.n_factors != 2)
    throw std::invalid_argument("sabr_hybrid_tilde: lattice must have 2 factors");
  if (n <= 0 || lattice.n_steps % n != 0)
    throw std::invalid_argument(
        "sabr_hybrid_tilde: n must divide lattice.n_steps");
  const std::int64_t base_steps = base_grid_steps == 0 ? n : base_grid_steps;
  if (base_steps % n != 0 || lattice.n_steps % base_steps != 0)
    throw std::invalid_argument(
        "sabr_hybrid_tilde: base grid must refine the n-point grid and be "
        "contained in the lattice");

  const SdeModel full = sabr_logvol_model(params);
  const SdeModel cev = sabr_base_cev_model(params);

  const IncrementLattice lat_n =
      lattice.n_steps == n ? lattice : coarsen(lattice, lattice.n_steps / n);
  const SchemePath at_eps = euler_maruyama(full, params.nu, lat_n);
  const SchemePath at_zero = euler_maruyama(full, 0.0, lat_n);

  const IncrementLattice base_lat =
      lattice.n_steps == base_steps
          ? lattice
          : coarsen(lattice, lattice.n_steps / base_steps);
  const SchemePath base_full =
      milstein(cev, 0.0, select_factor(base_lat, 0));
  const SchemePath base = restrict_to_grid(base_full, n);

  SchemePath out;
  out.state_dim = 1;
  out.scheme_label = "sabr_tilde";
  out.eps = params.nu;
  out.grid_times = base.grid_times;
  out.values.resize(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i)
    out.values[static_cast<std::size_t>(i)] =
        at_eps.value(i, 0) - at_zero.value(i, 0) + base.value(i, 0);
  return out;
}

SchemePath sabr_hybrid_check(const SabrParams& params,
                             const IncrementLattice& lattice, std::int64_t n) {
  if (lattice.n_factors != 2)
    throw std::invalid_argument("sabr_hybrid_check: lattice must have 2 factors");
  if (n <= 0 || lattice.n_steps % n != 0)
    throw std::invalid_argument(
        "sabr_hybrid_check: n must divide lattice.n_steps");

  const SdeModel full = sabr_logvol_model(params);
  const SdeModel proxy = scaled_base_model(params);

  const IncrementLattice lat_n =
      lattice.n_steps == n ? lattice : coarsen(lattice, lattice.n_steps / n);
  const SchemePath at_eps = euler_maruyama(full, params.nu, lat_n);

  const IncrementLattice col0 = select_factor(lat_n, 0);
  const SchemePath proxy_em = euler_maruyama(proxy, 0.0, col0);
  const SchemePath proxy_exact = gbm_exact_path(col0, params.base_vol(), 1.0);

  SchemePath out;
  out.state_dim = 1;
  out.scheme_label = "sabr_check";
  out.eps = params.nu;
  out.grid_times = proxy_em.grid_times;
  out.values.resize(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i)
    out.values[static_cast<std::size_t>(i)] =
        at_eps.value(i, 0) -
        params.s0 * (proxy_em.value(i, 0) - proxy_exact.value(i, 0));
  return out;
}

CoupledPair coupled_pair(const SdeModel& model, double eps,
                         const IncrementLattice& fine_lattice, std::int64_t k,
                         SchemeKind kind, bool accelerated,
                         const SchemePath* base_exact) {
  if (k <= 0 || fine_lattice.n_steps % k != 0)
    throw std::invalid_argument(
        "coupled_pair: k must divide fine_lattice.n_steps");
  if (accelerated && base_exact == nullptr)
    throw std::invalid_argument(
        "coupled_pair: accelerated coupling needs a base path");

  const IncrementLattice coarse_lattice = coarsen(fine_lattice, k);
  const bool mil = kind == SchemeKind::Milstein;

  auto leg = [&](const IncrementLattice& lat) {
    if (accelerated) {
      return mil ? accelerated_milstein(model, eps, lat, *base_exact)
                 : accelerated_em(model, eps, lat, *base_exact);
    }
    return mil ? milstein(model, eps, lat) : euler_maruyama(model, eps, lat);
  };

  CoupledPair pair{leg(fine_lattice), leg(coarse_lattice)};
  return pair;
}

}  // namespace accelmc
