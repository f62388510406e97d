#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "accelmc/brownian.hpp"
#include "accelmc/path.hpp"

namespace accelmc {

// A time-homogeneous SDE dX = b(X, eps) dt + sigma(X, eps) dB with N state
// components driven by d Brownian factors. Coefficient callbacks write into
// caller-provided buffers: drift fills N entries, diffusion fills the N x d
// matrix row-major.
//
// milstein_correction is optional and only meaningful for d = 1: it fills N
// entries with (sigma * dsigma/dx)(x, eps) per component.
//
// post_step, when set, is applied to the state after every scheme step; the
// SABR-family models use it to absorb the price component at zero (S <= 0
// stays 0: drift and diffusion of max(S,0)^beta then vanish).
struct SdeModel {
  int state_dim = 1;
  int factor_dim = 1;
  std::vector<double> initial_state;
  std::function<void(std::span<const double>, double, std::span<double>)> drift;
  std::function<void(std::span<const double>, double, std::span<double>)>
      diffusion;
  std::function<void(std::span<const double>, double, std::span<double>)>
      milstein_correction;  // empty when the scheme family does not apply
  std::function<void(std::span<double>)> post_step;
  std::string label;

  bool has_milstein() const noexcept {
    return static_cast<bool>(milstein_correction);
  }
};

// Log-volatility SABR parameters. The volatility-of-volatility nu doubles as
// the perturbation size eps; at eps = 0 the log-vol component is identically
// zero and the price follows a constant-variance CEV diffusion.
struct SabrParams {
  double s0 = 100.0;
  double beta = 0.9;
  double alpha0 = 0.0;  // <= 0 means: use 0.16 * s0^(2(1-beta))
  double nu = 0.1;
  double rho = -0.6;
  double horizon = 1.0;

  SabrParams() { alpha0 = scaled_alpha0(s0, beta); }
  SabrParams(double s0_, double beta_, double alpha0_, double nu_, double rho_,
             double horizon_);

  static double scaled_alpha0(double s0, double beta);
  double base_vol() const;  // sqrt(alpha0) * s0^(beta-1), lognormal proxy vol
};

// Two-state model (S, a) with dS = sqrt(alpha0 * exp(a)) * max(S,0)^beta dB1
// and da = -eps^2/2 dt + eps * (rho dB1 + sqrt(1-rho^2) dB2). Correlation is
// embedded in the 2x2 diffusion matrix; feed it plain independent lattices.
SdeModel sabr_logvol_model(const SabrParams& params);

// One-factor price dynamics at eps = 0: dS = sqrt(alpha0) * max(S,0)^beta dB,
// with the Milstein correction alpha0 * beta * max(S,0)^(2 beta - 1).
SdeModel sabr_base_cev_model(const SabrParams& params);

// Unit-initial lognormal proxy dL = base_vol() * L dB used by the check-style
// hybrid; exact transition available through gbm_exact_path.
SdeModel scaled_base_model(const SabrParams& params);

// Driftless GBM with vol (base_vol + eps): the canonical model on which the
// strong-rate claims are measured against the exact solution.
SdeModel perturbed_gbm(double base_vol, double x0 = 1.0);

// Exact driftless geometric Brownian path on the lattice grid:
// x0 * exp(vol * W_t - vol^2 t / 2) with W the running increment sum.
// Requires a one-factor lattice.
SchemePath gbm_exact_path(const IncrementLattice& lattice, double vol,
                          double x0);

// Driftless Black-Scholes call E[max(S_T - K, 0)] with S_T lognormal around
// s0. strike <= 0 degenerates to s0 - strike; vol = 0 to the intrinsic value.
double gbm_call_price(double s0, double strike, double vol, double maturity);

// P(S_T >= strike) under the same dynamics; strike <= 0 gives 1.
double gbm_digital_price(double s0, double strike, double vol,
                         double maturity);

// Expectation of the ramp that rises linearly from 0 at strike-h to 1 at
// strike+h: exactly (call(strike-h) - call(strike+h)) / (2h).
double gbm_smoothed_digital_price(double s0, double strike, double h,
                                  double vol, double maturity);

}  // namespace accelmc
