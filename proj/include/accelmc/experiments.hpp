#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accelmc/errorlab.hpp"
#include "accelmc/models.hpp"
#include "accelmc/parallel.hpp"

namespace accelmc {

enum class ExperimentKind {
  PathDemo,
  StrongError,
  NuSweep,
  BetaSweep,
  MlmcDiagnostics,
  MlmcPrice,
};

// Canonical lowercase names used as CLI subcommands and output file stems.
const char* experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_name(const std::string& name);

struct PayoffSpec {
  std::string type = "call";  // "call" or "digital"
  double strike = 100.0;
  double smoothing = 1.0;  // half-width of the ramp localizing a digital
};

struct MlmcSettings {
  int base = 4;
  int max_level = 4;
  double target_rmse = 0.1;
  std::int64_t pilot = 2000;
  std::string allocation = "cost_optimal";  // or "paper"
  std::vector<std::string> estimators = {"standard", "accelerated"};
  // Empty means: derive from the beta = 1 lognormal closed form. A number
  // pins E[f(S_T)] (resp. E[f_s(S_T)]) under the eps = 0 base dynamics.
  std::optional<double> base_expectation;
  std::optional<double> base_expectation_smooth;
};

// Effective settings for one run. Fields irrelevant to the chosen experiment
// are carried but ignored (samples for path_demo and mlmc_price, mlmc block
// for the strong-error family, and so on); defaults depend on the kind.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::StrongError;
  SabrParams model;
  std::vector<std::int64_t> grids = {8, 16, 32, 64, 128, 256};
  std::int64_t n_ref = std::int64_t{1} << 14;
  std::int64_t samples = 10000;  // paths per grid point / per level
  double p = 2.0;
  std::uint64_t seed = 42;
  std::vector<double> nu_values = {0.1, 0.3, 0.5, 0.7};
  std::vector<double> beta_values = {0.999, 0.99, 0.95, 0.9};
  std::int64_t base_grid_factor = 1;  // hybrid base grid = factor * n
  PayoffSpec payoff;
  MlmcSettings mlmc;
  std::int64_t path_index = 0;  // path_demo only
  std::int64_t demo_n = 16;     // path_demo coarse grid
  int threads = 0;              // 0 = executor default
};

ExperimentConfig default_config(ExperimentKind kind);

// Ordered JSON dump of every semantically relevant field (threads excluded:
// it cannot change any output byte). Identical configs hash identically via
// fnv1a_hex regardless of which keys the input file spelled out.
std::string canonical_config(const ExperimentConfig& config);

struct ValidateResult {
  std::optional<ExperimentConfig> config;  // set iff errors is empty
  std::vector<std::string> errors;         // "path.to.key: message" lines
  bool ok() const { return errors.empty(); }
};

// Parses and checks a JSON config against the schema for `kind`. Unknown
// keys are rejected, every detected problem is reported (not just the
// first), and nothing is computed from a config that failed validation.
// An "experiment" key in the file must agree with `kind`.
ValidateResult validate_config(ExperimentKind kind,
                               const std::string& json_text);

// Shared strong-error kernel: per path, one n_ref-step Euler reference of
// the two-factor model at eps = nu, then for every n in grids the standard
// Euler path and the price-hybrid paths on the coarsened lattice, reduced to
// L^p terminal and sup-on-grid error tables. Paths where any scheme leaves
// the finite range are excluded from every column and counted.
struct SabrStudy {
  ErrorTable standard_terminal, standard_sup;
  ErrorTable tilde_terminal, tilde_sup;
  ErrorTable check_terminal, check_sup;  // populated only with_check
  std::int64_t samples = 0;
  std::int64_t excluded = 0;
};

SabrStudy run_sabr_study(const SabrParams& params,
                         std::span<const std::int64_t> grids,
                         std::int64_t n_ref, std::int64_t samples, double p,
                         std::uint64_t seed, std::int64_t base_grid_factor,
                         bool with_check, Exec exec = Exec::Parallel);

// E[f(S_T)] under the eps = 0 base dynamics for beta = 1 (driftless
// lognormal with vol sqrt(alpha0)); smooth_part swaps a digital for its
// localizing ramp. Throws for beta != 1, where no closed form is wired up.
double auto_base_expectation(const SabrParams& params, const PayoffSpec& spec,
                             bool smooth_part);

struct ExperimentResult {
  int exit_code = 0;  // 0 ok; 3 when > 1% of paths were excluded
  std::vector<std::string> files_written;
  std::int64_t total_paths = 0;
  std::int64_t excluded_paths = 0;
  double elapsed_ms = 0.0;
};

// Runs the configured experiment and writes its CSV tables under out_dir
// (created if missing). Output bodies are a pure function of (config, seed);
// the '#' manifest header carries version, config hash, seed and timing.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir,
                                Exec exec = Exec::Parallel);

}  // namespace accelmc
