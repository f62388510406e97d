#include "accelmc/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace accelmc {

namespace {

// max(s,0)^beta with the beta = 1 fast path; pow(0, beta) = 0 for beta > 0.
inline double cev_pow(double s, double beta) {
  const double sp = s > 0.0 ? s : 0.0;
  return beta == 1.0 ? sp : std::pow(sp, beta);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

void require(bool ok, std::string& errors, const char* message) {
  if (!ok) {
    if (!errors.empty()) errors += "; ";
    errors += message;
  }
}

}  // namespace

SabrParams::SabrParams(double s0_, double beta_, double alpha0_, double nu_,
                       double rho_, double horizon_)
    : s0(s0_), beta(beta_), alpha0(alpha0_), nu(nu_), rho(rho_),
      horizon(horizon_) {
  std::string errors;
  require(s0 > 0.0, errors, "s0 must be positive");
  require(beta > 0.0 && beta <= 1.0, errors, "beta must be in (0, 1]");
  require(nu >= 0.0, errors, "nu must be non-negative");
  require(rho >= -1.0 && rho <= 1.0, errors, "rho must be in [-1, 1]");
  require(horizon > 0.0, errors, "horizon must be positive");
  if (alpha0 <= 0.0) alpha0 = scaled_alpha0(s0, beta);
  if (!errors.empty())
    throw std::invalid_argument("SabrParams: " + errors);
}

double SabrParams::scaled_alpha0(double s0, double beta) {
  // keeps the lognormal proxy vol at 0.40 regardless of beta
  return 0.16 * std::pow(s0, 2.0 * (1.0 - beta));
}

double SabrParams::base_vol() const {
  return std::sqrt(alpha0) * std::pow(s0, beta - 1.0);
}

SdeModel sabr_logvol_model(const SabrParams& params) {
  SdeModel m;
  m.state_dim = 2;
  m.factor_dim = 2;
  m.initial_state = {params.s0, 0.0};
  m.label = "sabr_logvol";

  const double a0 = params.alpha0;
  const double beta = params.beta;
  const double rho = params.rho;
  const double rho_c = std::sqrt(1.0 - rho * rho);

  m.drift = [](std::span<const double>, double eps, std::span<double> out) {
    out[0] = 0.0;
    out[1] = -0.5 * eps * eps;
  };
  m.diffusion = [a0, beta, rho, rho_c](std::span<const double> x, double eps,
                                       std::span<double> out) {
    const double vol = std::sqrt(a0 * std::exp(x[1]));
    out[0] = vol * cev_pow(x[0], beta);
    out[1] = 0.0;
    out[2] = eps * rho;
    out[3] = eps * rho_c;
  };
  m.post_step = [](std::span<double> x) {
    if (x[0] < 0.0) x[0] = 0.0;
  };
  return m;
}

SdeModel sabr_base_cev_model(const SabrParams& params) {
  SdeModel m;
  m.state_dim = 1;
  m.factor_dim = 1;
  m.initial_state = {params.s0};
  m.label = "sabr_base_cev";

  const double a0 = params.alpha0;
  const double beta = params.beta;
  const double root_a0 = std::sqrt(a0);

  m.drift = [](std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  m.diffusion = [root_a0, beta](std::span<const double> x, double,
                                std::span<double> out) {
    out[0] = root_a0 * cev_pow(x[0], beta);
  };
  // sigma * sigma' = alpha0 * beta * s^(2 beta - 1), zero at the boundary
  m.milstein_correction = [a0, beta](std::span<const double> x, double,
                                     std::span<double> out) {
    out[0] = a0 * beta * cev_pow(x[0], 2.0 * beta - 1.0);
  };
  m.post_step = [](std::span<double> x) {
    if (x[0] < 0.0) x[0] = 0.0;
  };
  return m;
}

SdeModel scaled_base_model(const SabrParams& params) {
  SdeModel m;
  m.state_dim = 1;
  m.factor_dim = 1;
  m.initial_state = {1.0};
  m.label = "scaled_base_gbm";

  const double v = params.base_vol();
  m.drift = [](std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  m.diffusion = [v](std::span<const double> x, double, std::span<double> out) {
    out[0] = v * x[0];
  };
  m.milstein_correction = [v](std::span<const double> x, double,
                              std::span<double> out) {
    out[0] = v * v * x[0];
  };
  return m;
}

SdeModel perturbed_gbm(double base_vol, double x0) {
  if (!(base_vol > 0.0))
    throw std::invalid_argument("perturbed_gbm: base_vol must be positive");
  SdeModel m;
  m.state_dim = 1;
  m.factor_dim = 1;
  m.initial_state = {x0};
  m.label = "perturbed_gbm";

  m.drift = [](std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  m.diffusion = [base_vol](std::span<const double> x, double eps,
                           std::span<double> out) {
    out[0] = (base_vol + eps) * x[0];
  };
  m.milstein_correction = [base_vol](std::span<const double> x, double eps,
                                     std::span<double> out) {
    const double v = base_vol + eps;
    out[0] = v * v * x[0];
  };
  return m;
}

SchemePath gbm_exact_path(const IncrementLattice& lattice, double vol,
                          double x0) {
  if (lattice.n_factors != 1)
    throw std::invalid_argument("gbm_exact_path: lattice must have 1 factor");

  const std::int64_t n = lattice.n_steps;
  SchemePath path;
  path.state_dim = 1;
  path.scheme_label = "gbm_exact";
  path.eps = 0.0;
  path.grid_times.resize(static_cast<std::size_t>(n) + 1);
  path.values.resize(static_cast<std::size_t>(n) + 1);

  const double half_var = 0.5 * vol * vol;
  double w = 0.0;
  path.grid_times[0] = 0.0;
  path.values[0] = x0;
  for (std::int64_t i = 1; i <= n; ++i) {
    w += lattice(i - 1, 0);
    const double t = static_cast<double>(i) * lattice.dt;
    path.grid_times[static_cast<std::size_t>(i)] = t;
    path.values[static_cast<std::size_t>(i)] =
        x0 * std::exp(vol * w - half_var * t);
  }
  return path;
}

double gbm_call_price(double s0, double strike, double vol, double maturity) {
  if (!(s0 > 0.0))
    throw std::invalid_argument("gbm_call_price: s0 must be positive");
  if (!(maturity > 0.0))
    throw std::invalid_argument("gbm_call_price: maturity must be positive");
  if (!(vol >= 0.0))
    throw std::invalid_argument("gbm_call_price: vol must be non-negative");
  if (strike <= 0.0) return s0 - strike;  // payoff is linear almost surely
  const double sd = vol * std::sqrt(maturity);
  if (sd == 0.0) return s0 > strike ? s0 - strike : 0.0;
  const double d1 = (std::log(s0 / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  return s0 * norm_cdf(d1) - strike * norm_cdf(d2);
}

double gbm_digital_price(double s0, double strike, double vol,
                         double maturity) {
  if (!(s0 > 0.0))
    throw std::invalid_argument("gbm_digital_price: s0 must be positive");
  if (!(maturity > 0.0))
    throw std::invalid_argument(
        "gbm_digital_price: maturity must be positive");
  if (!(vol >= 0.0))
    throw std::invalid_argument("gbm_digital_price: vol must be non-negative");
  if (strike <= 0.0) return 1.0;
  const double sd = vol * std::sqrt(maturity);
  if (sd == 0.0) return s0 >= strike ? 1.0 : 0.0;
  const double d2 = (std::log(s0 / strike) - 0.5 * sd * sd) / sd;
  return norm_cdf(d2);
}

double gbm_smoothed_digital_price(double s0, double strike, double h,
                                  double vol, double maturity) {
  if (!(h > 0.0))
    throw std::invalid_argument(
        "gbm_smoothed_digital_price: h must be positive");
  return (gbm_call_price(s0, strike - h, vol, maturity) -
          gbm_call_price(s0, strike + h, vol, maturity)) /
         (2.0 * h);
}

}  // namespace accelmc
