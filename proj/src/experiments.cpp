#include "accelmc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "accelmc/brownian.hpp"
#include "accelmc/csv.hpp"
#include "accelmc/mlmc.hpp"
#include "accelmc/payoffs.hpp"
#include "accelmc/schemes.hpp"

namespace accelmc {

namespace {

constexpr const char* kVersion = "accelmc 0.1.0";

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

Payoff make_payoff(const PayoffSpec& spec) {
  return spec.type == "call" ? european_call(spec.strike)
                             : digital(spec.strike);
}

LocalizedPayoff make_localized(const PayoffSpec& spec) {
  return localize(digital(spec.strike),
                  smoothed_digital(spec.strike, spec.smoothing));
}

}  // namespace

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::PathDemo: return "path_demo";
    case ExperimentKind::StrongError: return "strong_error";
    case ExperimentKind::NuSweep: return "nu_sweep";
    case ExperimentKind::BetaSweep: return "beta_sweep";
    case ExperimentKind::MlmcDiagnostics: return "mlmc_diagnostics";
    case ExperimentKind::MlmcPrice: return "mlmc_price";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_name(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::PathDemo, ExperimentKind::StrongError,
        ExperimentKind::NuSweep, ExperimentKind::BetaSweep,
        ExperimentKind::MlmcDiagnostics, ExperimentKind::MlmcPrice}) {
    if (name == experiment_name(kind)) return kind;
  }
  return std::nullopt;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig config;
  config.kind = kind;
  switch (kind) {
    case ExperimentKind::PathDemo:
      config.samples = 1;
      break;
    case ExperimentKind::StrongError:
    case ExperimentKind::NuSweep:
    case ExperimentKind::BetaSweep:
      config.samples = 10000;
      break;
    case ExperimentKind::MlmcDiagnostics:
      config.samples = 100000;
      config.model = SabrParams(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
      break;
    case ExperimentKind::MlmcPrice:
      config.samples = 0;  // allocation-driven, key ignored
      config.model = SabrParams(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
      break;
  }
  return config;
}

std::string canonical_config(const ExperimentConfig& c) {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["experiment"] = experiment_name(c.kind);
  j["model"] = ojson{{"s0", c.model.s0},        {"beta", c.model.beta},
                     {"alpha0", c.model.alpha0}, {"nu", c.model.nu},
                     {"rho", c.model.rho},       {"horizon", c.model.horizon}};
  j["grids"] = c.grids;
  j["n_ref"] = c.n_ref;
  j["samples"] = c.samples;
  j["p"] = c.p;
  j["seed"] = c.seed;
  j["nu_values"] = c.nu_values;
  j["beta_values"] = c.beta_values;
  j["base_grid_factor"] = c.base_grid_factor;
  j["payoff"] = ojson{{"type", c.payoff.type},
                      {"strike", c.payoff.strike},
                      {"smoothing", c.payoff.smoothing}};
  ojson m;
  m["base"] = c.mlmc.base;
  m["max_level"] = c.mlmc.max_level;
  m["target_rmse"] = c.mlmc.target_rmse;
  m["pilot"] = c.mlmc.pilot;
  m["allocation"] = c.mlmc.allocation;
  m["estimators"] = c.mlmc.estimators;
  m["base_expectation"] =
      c.mlmc.base_expectation ? ojson(*c.mlmc.base_expectation) : ojson("auto");
  m["base_expectation_smooth"] = c.mlmc.base_expectation_smooth
                                     ? ojson(*c.mlmc.base_expectation_smooth)
                                     : ojson("auto");
  j["mlmc"] = std::move(m);
  j["path_index"] = c.path_index;
  j["demo_n"] = c.demo_n;
  return j.dump();
}

ValidateResult validate_config(ExperimentKind kind,
                               const std::string& json_text) {
  using njson = nlohmann::json;
  ValidateResult result;
  auto& errors = result.errors;

  njson root;
  try {
    root = njson::parse(json_text);
  } catch (const njson::parse_error& e) {
    errors.push_back(std::string("config: ") + e.what());
    return result;
  }
  if (!root.is_object()) {
    errors.push_back("config: top level must be a JSON object");
    return result;
  }

  ExperimentConfig cfg = default_config(kind);

  auto fail = [&](const std::string& path, const std::string& message) {
    errors.push_back(path + ": " + message);
  };
  auto join = [](const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  };
  auto check_keys = [&](const njson& obj, const std::string& prefix,
                        std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
      const bool known =
          std::any_of(allowed.begin(), allowed.end(),
                      [&](const char* k) { return item.key() == k; });
      if (!known) fail(join(prefix, item.key()), "unknown key");
    }
  };
  auto num_field = [&](const njson& obj, const std::string& prefix,
                       const char* key, double& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (!v.is_number()) {
      fail(join(prefix, key), "expected a number");
      return;
    }
    out = v.get<double>();
  };
  auto int_field = [&](const njson& obj, const std::string& prefix,
                       const char* key, auto& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(join(prefix, key), "expected an integer");
      return;
    }
    out = static_cast<std::remove_reference_t<decltype(out)>>(
        v.get<std::int64_t>());
  };
  auto u64_field = [&](const njson& obj, const std::string& prefix,
                       const char* key, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else {
      fail(join(prefix, key), "expected a non-negative integer");
    }
  };
  auto str_field = [&](const njson& obj, const std::string& prefix,
                       const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (!v.is_string()) {
      fail(join(prefix, key), "expected a string");
      return;
    }
    out = v.get<std::string>();
  };
  auto int_array_field = [&](const njson& obj, const std::string& prefix,
                             const char* key,
                             std::vector<std::int64_t>& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (!v.is_array() ||
        !std::all_of(v.begin(), v.end(),
                     [](const njson& e) { return e.is_number_integer(); })) {
      fail(join(prefix, key), "expected an array of integers");
      return;
    }
    out.clear();
    for (const njson& e : v) out.push_back(e.get<std::int64_t>());
  };
  auto num_array_field = [&](const njson& obj, const std::string& prefix,
                             const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const njson& v = obj.at(key);
    if (!v.is_array() ||
        !std::all_of(v.begin(), v.end(),
                     [](const njson& e) { return e.is_number(); })) {
      fail(join(prefix, key), "expected an array of numbers");
      return;
    }
    out.clear();
    for (const njson& e : v) out.push_back(e.get<double>());
  };

  check_keys(root, "",
             {"experiment", "model", "grids", "n_ref", "samples", "p", "seed",
              "nu_values", "beta_values", "base_grid_factor", "payoff", "mlmc",
              "path_index", "demo_n", "threads"});

  std::string named_experiment;
  str_field(root, "", "experiment", named_experiment);
  if (!named_experiment.empty() &&
      named_experiment != experiment_name(kind)) {
    fail("experiment", "file names '" + named_experiment +
                           "' but the subcommand is '" +
                           std::string(experiment_name(kind)) + "'");
  }

  double s0 = cfg.model.s0, beta = cfg.model.beta, alpha0 = cfg.model.alpha0;
  double nu = cfg.model.nu, rho = cfg.model.rho, horizon = cfg.model.horizon;
  if (root.contains("model")) {
    const njson& m = root.at("model");
    if (!m.is_object()) {
      fail("model", "expected an object");
    } else {
      check_keys(m, "model", {"s0", "beta", "alpha0", "nu", "rho", "horizon"});
      num_field(m, "model", "s0", s0);
      num_field(m, "model", "beta", beta);
      num_field(m, "model", "alpha0", alpha0);
      num_field(m, "model", "nu", nu);
      num_field(m, "model", "rho", rho);
      num_field(m, "model", "horizon", horizon);
    }
  }
  if (!(s0 > 0.0)) fail("model.s0", "must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) fail("model.beta", "must be in (0, 1]");
  if (!(nu >= 0.0)) fail("model.nu", "must be non-negative");
  if (!(rho >= -1.0 && rho <= 1.0)) fail("model.rho", "must be in [-1, 1]");
  if (!(horizon > 0.0)) fail("model.horizon", "must be positive");

  int_array_field(root, "", "grids", cfg.grids);
  int_field(root, "", "n_ref", cfg.n_ref);
  int_field(root, "", "samples", cfg.samples);
  num_field(root, "", "p", cfg.p);
  u64_field(root, "", "seed", cfg.seed);
  num_array_field(root, "", "nu_values", cfg.nu_values);
  num_array_field(root, "", "beta_values", cfg.beta_values);
  int_field(root, "", "base_grid_factor", cfg.base_grid_factor);
  int_field(root, "", "path_index", cfg.path_index);
  int_field(root, "", "demo_n", cfg.demo_n);
  int_field(root, "", "threads", cfg.threads);

  if (root.contains("payoff")) {
    const njson& pj = root.at("payoff");
    if (!pj.is_object()) {
      fail("payoff", "expected an object");
    } else {
      check_keys(pj, "payoff", {"type", "strike", "smoothing"});
      str_field(pj, "payoff", "type", cfg.payoff.type);
      num_field(pj, "payoff", "strike", cfg.payoff.strike);
      num_field(pj, "payoff", "smoothing", cfg.payoff.smoothing);
    }
  }
  if (root.contains("mlmc")) {
    const njson& mj = root.at("mlmc");
    if (!mj.is_object()) {
      fail("mlmc", "expected an object");
    } else {
      check_keys(mj, "mlmc",
                 {"base", "max_level", "target_rmse", "pilot", "allocation",
                  "estimators", "base_expectation", "base_expectation_smooth"});
      int_field(mj, "mlmc", "base", cfg.mlmc.base);
      int_field(mj, "mlmc", "max_level", cfg.mlmc.max_level);
      num_field(mj, "mlmc", "target_rmse", cfg.mlmc.target_rmse);
      int_field(mj, "mlmc", "pilot", cfg.mlmc.pilot);
      str_field(mj, "mlmc", "allocation", cfg.mlmc.allocation);
      if (mj.contains("estimators")) {
        const njson& ej = mj.at("estimators");
        if (!ej.is_array() ||
            !std::all_of(ej.begin(), ej.end(),
                         [](const njson& e) { return e.is_string(); })) {
          fail("mlmc.estimators", "expected an array of strings");
        } else {
          cfg.mlmc.estimators.clear();
          for (const njson& e : ej)
            cfg.mlmc.estimators.push_back(e.get<std::string>());
        }
      }
      auto expectation_field = [&](const char* key,
                                   std::optional<double>& out) {
        if (!mj.contains(key)) return;
        const njson& v = mj.at(key);
        if (v.is_string() && v.get<std::string>() == "auto") {
          out.reset();
        } else if (v.is_number()) {
          out = v.get<double>();
        } else {
          fail(join("mlmc", key), "expected a number or \"auto\"");
        }
      };
      expectation_field("base_expectation", cfg.mlmc.base_expectation);
      expectation_field("base_expectation_smooth",
                        cfg.mlmc.base_expectation_smooth);
    }
  }

  // Semantic checks run on the merged config so defaults are covered too.
  if (cfg.n_ref < 1) fail("n_ref", "must be at least 1");
  if (cfg.grids.empty()) fail("grids", "must not be empty");
  std::vector<std::int64_t> sorted = cfg.grids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail("grids", "grid sizes must be distinct");
  for (std::int64_t n : sorted) {
    if (n < 1) {
      fail("grids", "n=" + std::to_string(n) + " must be at least 1");
    } else if (cfg.n_ref >= 1 && cfg.n_ref % n != 0) {
      fail("grids", "n=" + std::to_string(n) + " does not divide n_ref=" +
                        std::to_string(cfg.n_ref));
    }
  }
  cfg.grids = std::move(sorted);

  if (cfg.base_grid_factor < 1) {
    fail("base_grid_factor", "must be at least 1");
  } else if (cfg.n_ref >= 1) {
    for (std::int64_t n : cfg.grids) {
      const std::int64_t base_steps = n * cfg.base_grid_factor;
      if (n >= 1 && (base_steps > cfg.n_ref || cfg.n_ref % base_steps != 0)) {
        fail("base_grid_factor",
             "hybrid base grid " + std::to_string(base_steps) +
                 " does not divide n_ref=" + std::to_string(cfg.n_ref));
        break;
      }
    }
  }

  const bool uses_samples = kind == ExperimentKind::StrongError ||
                            kind == ExperimentKind::NuSweep ||
                            kind == ExperimentKind::BetaSweep ||
                            kind == ExperimentKind::MlmcDiagnostics;
  if (uses_samples && cfg.samples < 2)
    fail("samples", "must be at least 2");
  if (!uses_samples && cfg.samples < 0)
    fail("samples", "must be non-negative");
  if (!(cfg.p >= 1.0)) fail("p", "must be at least 1");
  if (cfg.threads < 0 || cfg.threads > 4096)
    fail("threads", "must be in [0, 4096]");

  if (kind == ExperimentKind::NuSweep) {
    if (cfg.nu_values.empty()) fail("nu_values", "must not be empty");
    for (double v : cfg.nu_values)
      if (!(v >= 0.0)) fail("nu_values", fmt_g(v) + " is negative");
  }
  if (kind == ExperimentKind::BetaSweep) {
    if (cfg.beta_values.empty()) fail("beta_values", "must not be empty");
    for (double v : cfg.beta_values)
      if (!(v > 0.0 && v <= 1.0))
        fail("beta_values", fmt_g(v) + " is outside (0, 1]");
  }
  if (kind == ExperimentKind::PathDemo) {
    if (cfg.path_index < 0) fail("path_index", "must be non-negative");
    if (cfg.demo_n < 1) {
      fail("demo_n", "must be at least 1");
    } else if (cfg.n_ref >= 1) {
      const std::int64_t base_steps = cfg.demo_n * cfg.base_grid_factor;
      if (cfg.n_ref % cfg.demo_n != 0)
        fail("demo_n", "must divide n_ref=" + std::to_string(cfg.n_ref));
      else if (cfg.base_grid_factor >= 1 &&
               (base_steps > cfg.n_ref || cfg.n_ref % base_steps != 0))
        fail("base_grid_factor",
             "hybrid base grid " + std::to_string(base_steps) +
                 " does not divide n_ref=" + std::to_string(cfg.n_ref));
    }
  }

  if (cfg.payoff.type != "call" && cfg.payoff.type != "digital")
    fail("payoff.type", "must be \"call\" or \"digital\"");
  if (!(cfg.payoff.strike > 0.0)) fail("payoff.strike", "must be positive");
  if (!(cfg.payoff.smoothing > 0.0))
    fail("payoff.smoothing", "must be positive");

  if (cfg.mlmc.base < 2) fail("mlmc.base", "must be at least 2");
  if (cfg.mlmc.max_level < 1 || cfg.mlmc.max_level > 16) {
    fail("mlmc.max_level", "must be in [1, 16]");
  } else if (cfg.mlmc.base >= 2) {
    double top = std::pow(double(cfg.mlmc.base), double(cfg.mlmc.max_level));
    if (top > double(std::int64_t{1} << 20))
      fail("mlmc.max_level", "base^max_level exceeds 2^20 steps");
  }
  if (!(cfg.mlmc.target_rmse > 0.0))
    fail("mlmc.target_rmse", "must be positive");
  if (cfg.mlmc.pilot < 100) fail("mlmc.pilot", "must be at least 100");
  if (cfg.mlmc.allocation != "paper" && cfg.mlmc.allocation != "cost_optimal")
    fail("mlmc.allocation", "must be \"paper\" or \"cost_optimal\"");
  if (cfg.mlmc.estimators.empty()) {
    fail("mlmc.estimators", "must not be empty");
  } else {
    for (const std::string& e : cfg.mlmc.estimators) {
      if (e != "standard" && e != "accelerated" && e != "localized")
        fail("mlmc.estimators", "unknown estimator '" + e + "'");
      if (std::count(cfg.mlmc.estimators.begin(), cfg.mlmc.estimators.end(),
                     e) > 1) {
        fail("mlmc.estimators", "duplicate entry '" + e + "'");
        break;
      }
    }
    const bool wants_localized =
        std::count(cfg.mlmc.estimators.begin(), cfg.mlmc.estimators.end(),
                   "localized") > 0;
    if (wants_localized && cfg.payoff.type != "digital")
      fail("mlmc.estimators",
           "localized applies to payoff.type \"digital\" only");
  }

  const bool mlmc_kind = kind == ExperimentKind::MlmcDiagnostics ||
                         kind == ExperimentKind::MlmcPrice;
  if (mlmc_kind && errors.empty()) {
    const bool needs_base =
        kind == ExperimentKind::MlmcDiagnostics ||
        std::count(cfg.mlmc.estimators.begin(), cfg.mlmc.estimators.end(),
                   "accelerated") > 0 ||
        std::count(cfg.mlmc.estimators.begin(), cfg.mlmc.estimators.end(),
                   "localized") > 0;
    if (needs_base && beta != 1.0) {
      if (!cfg.mlmc.base_expectation)
        fail("mlmc.base_expectation",
             "no closed form for beta != 1; give a number");
      if (cfg.payoff.type == "digital" && !cfg.mlmc.base_expectation_smooth)
        fail("mlmc.base_expectation_smooth",
             "no closed form for beta != 1; give a number");
    }
  }

  if (!errors.empty()) return result;
  cfg.model = SabrParams(s0, beta, alpha0, nu, rho, horizon);
  result.config = std::move(cfg);
  return result;
}

double auto_base_expectation(const SabrParams& params, const PayoffSpec& spec,
                             bool smooth_part) {
  if (params.beta != 1.0)
    throw std::invalid_argument(
        "auto base expectation needs beta = 1 (lognormal closed form)");
  const double vol = std::sqrt(params.alpha0);
  if (spec.type == "call")
    return gbm_call_price(params.s0, spec.strike, vol, params.horizon);
  if (smooth_part)
    return gbm_smoothed_digital_price(params.s0, spec.strike, spec.smoothing,
                                      vol, params.horizon);
  return gbm_digital_price(params.s0, spec.strike, vol, params.horizon);
}

namespace {

// Terminal and running-sup distance of one scheme path from the reference,
// both over the scheme path's own grid (component 0 on each side).
void write_diffs(const SchemePath& ref, std::int64_t n_ref,
                 const SchemePath& path, double* out2) {
  const std::int64_t pn = path.n_steps();
  const std::int64_t stride = n_ref / pn;
  double sup = 0.0;
  for (std::int64_t i = 0; i <= pn; ++i) {
    const double d = std::fabs(path.value(i, 0) - ref.value(i * stride, 0));
    if (d > sup) sup = d;
  }
  out2[0] = std::fabs(path.value(pn, 0) - ref.value(n_ref, 0));
  out2[1] = sup;
}

}  // namespace

SabrStudy run_sabr_study(const SabrParams& params,
                         std::span<const std::int64_t> grids,
                         std::int64_t n_ref, std::int64_t samples, double p,
                         std::uint64_t seed, std::int64_t base_grid_factor,
                         bool with_check, Exec exec) {
  if (grids.empty())
    throw std::invalid_argument("run_sabr_study: grids must not be empty");
  if (samples < 1)
    throw std::invalid_argument("run_sabr_study: samples must be at least 1");
  if (base_grid_factor < 1)
    throw std::invalid_argument(
        "run_sabr_study: base_grid_factor must be at least 1");
  for (std::int64_t n : grids) {
    const std::int64_t base_steps = n * base_grid_factor;
    if (n < 1 || n_ref % n != 0 || base_steps > n_ref ||
        n_ref % base_steps != 0)
      throw std::invalid_argument(
          "run_sabr_study: every grid (and its hybrid base grid) must divide "
          "n_ref");
  }

  const SdeModel model = sabr_logvol_model(params);
  const int n_schemes = with_check ? 3 : 2;
  const std::size_t n_grids = grids.size();
  const std::size_t cols = n_grids * static_cast<std::size_t>(n_schemes) * 2;
  std::vector<double> slab(static_cast<std::size_t>(samples) * cols);

  for_each_path(samples, exec, [&](std::int64_t j) {
    double* row = slab.data() + static_cast<std::size_t>(j) * cols;
    try {
      const IncrementLattice lat_ref = sample_lattice(
          seed, static_cast<std::uint64_t>(j), n_ref, 2, params.horizon);
      const SchemePath ref = euler_maruyama(model, params.nu, lat_ref);
      for (std::size_t g = 0; g < n_grids; ++g) {
        const std::int64_t n = grids[g];
        const IncrementLattice lat_n =
            n == n_ref ? lat_ref : coarsen(lat_ref, n_ref / n);
        double* cell = row + g * static_cast<std::size_t>(n_schemes) * 2;

        const SchemePath standard = euler_maruyama(model, params.nu, lat_n);
        write_diffs(ref, n_ref, standard, cell);

        SchemePath tilde;
        if (base_grid_factor == 1) {
          tilde = sabr_hybrid_tilde(params, lat_n, n);
        } else {
          const std::int64_t base_steps = n * base_grid_factor;
          const IncrementLattice lat_base =
              base_steps == n_ref ? lat_ref : coarsen(lat_ref, n_ref / base_steps);
          tilde = sabr_hybrid_tilde(params, lat_base, n, base_steps);
        }
        write_diffs(ref, n_ref, tilde, cell + 2);

        if (with_check) {
          const SchemePath check = sabr_hybrid_check(params, lat_n, n);
          write_diffs(ref, n_ref, check, cell + 4);
        }
      }
    } catch (const SchemeExplosionError&) {
      std::fill(row, row + cols,
                std::numeric_limits<double>::quiet_NaN());
    }
  });

  SabrStudy study;
  study.samples = samples;
  for (std::int64_t j = 0; j < samples; ++j)
    if (std::isnan(slab[static_cast<std::size_t>(j) * cols]))
      ++study.excluded;

  auto reduce = [&](std::size_t col, std::int64_t n, const char* label,
                    ErrorTable& table) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(samples));
    for (std::int64_t j = 0; j < samples; ++j) {
      const double v = slab[static_cast<std::size_t>(j) * cols + col];
      if (!std::isnan(v)) vals.push_back(v);
    }
    const LpEstimate est = lp_norm_estimate(vals, p);
    table.rows.push_back({n, label, est.value, est.std_error,
                          static_cast<std::int64_t>(vals.size()), 0.0});
  };
  for (std::size_t g = 0; g < n_grids; ++g) {
    const std::int64_t n = grids[g];
    const std::size_t cell = g * static_cast<std::size_t>(n_schemes) * 2;
    reduce(cell + 0, n, "standard", study.standard_terminal);
    reduce(cell + 1, n, "standard", study.standard_sup);
    reduce(cell + 2, n, "accelerated", study.tilde_terminal);
    reduce(cell + 3, n, "accelerated", study.tilde_sup);
    if (with_check) {
      reduce(cell + 4, n, "check", study.check_terminal);
      reduce(cell + 5, n, "check", study.check_sup);
    }
  }
  return study;
}

namespace {

struct DriverOutput {
  std::vector<CsvTable> tables;
  std::int64_t total_paths = 0;
  std::int64_t excluded_paths = 0;
};

void append_error_rows(CsvTable& table, const char* experiment,
                       const ErrorTable& rows, const std::string& label,
                       std::uint64_t seed) {
  for (const ErrorRow& r : rows.rows)
    table.rows.push_back(
        {experiment, label, r.n, r.error, r.std_error, r.samples, seed});
}

// Ratio rows carry the candidate's valid-sample count; tables are aligned
// per grid size by construction.
void append_ratio_rows(CsvTable& table, const char* experiment,
                       const ErrorTable& reference, const ErrorTable& candidate,
                       const std::string& label, std::uint64_t seed) {
  std::vector<RatioRow> ratios;
  try {
    ratios = error_ratio(reference, candidate);
  } catch (const std::domain_error&) {
    return;  // degenerate zero-error reference; raw rows are still emitted
  }
  for (std::size_t i = 0; i < ratios.size(); ++i)
    table.rows.push_back({experiment, label, ratios[i].n, ratios[i].percent,
                          ratios[i].std_error, candidate.rows[i].samples,
                          seed});
}

DriverOutput drive_path_demo(const ExperimentConfig& cfg) {
  DriverOutput out;
  CsvTable table{"path_demo", {}};
  const char* exp = experiment_name(cfg.kind);
  out.total_paths = 1;

  const SdeModel model = sabr_logvol_model(cfg.model);
  try {
    const IncrementLattice lat_ref =
        sample_lattice(cfg.seed, static_cast<std::uint64_t>(cfg.path_index),
                       cfg.n_ref, 2, cfg.model.horizon);
    const SchemePath ref = euler_maruyama(model, cfg.model.nu, lat_ref);

    std::int64_t display_n = 1;
    for (std::int64_t d = std::min<std::int64_t>(cfg.n_ref, 256); d >= 1; --d)
      if (cfg.n_ref % d == 0) {
        display_n = d;
        break;
      }
    const SchemePath ref_view = restrict_to_grid(ref, display_n);
    const std::int64_t ref_stride = cfg.n_ref / display_n;
    for (std::int64_t i = 0; i <= display_n; ++i)
      table.rows.push_back({exp, "reference", i * ref_stride,
                            ref_view.value(i, 0), 0.0, 1, cfg.seed});

    const IncrementLattice lat_demo =
        cfg.demo_n == cfg.n_ref ? lat_ref
                                : coarsen(lat_ref, cfg.n_ref / cfg.demo_n);
    const std::int64_t demo_stride = cfg.n_ref / cfg.demo_n;
    const SchemePath standard = euler_maruyama(model, cfg.model.nu, lat_demo);
    for (std::int64_t i = 0; i <= cfg.demo_n; ++i)
      table.rows.push_back({exp, "standard", i * demo_stride,
                            standard.value(i, 0), 0.0, 1, cfg.seed});

    SchemePath tilde;
    if (cfg.base_grid_factor == 1) {
      tilde = sabr_hybrid_tilde(cfg.model, lat_demo, cfg.demo_n);
    } else {
      const std::int64_t base_steps = cfg.demo_n * cfg.base_grid_factor;
      const IncrementLattice lat_base =
          base_steps == cfg.n_ref ? lat_ref
                                  : coarsen(lat_ref, cfg.n_ref / base_steps);
      tilde = sabr_hybrid_tilde(cfg.model, lat_base, cfg.demo_n, base_steps);
    }
    for (std::int64_t i = 0; i <= cfg.demo_n; ++i)
      table.rows.push_back({exp, "accelerated", i * demo_stride,
                            tilde.value(i, 0), 0.0, 1, cfg.seed});
  } catch (const SchemeExplosionError&) {
    out.excluded_paths = 1;
  }
  out.tables.push_back(std::move(table));
  return out;
}

DriverOutput drive_strong_error(const ExperimentConfig& cfg, Exec exec) {
  DriverOutput out;
  const char* exp = experiment_name(cfg.kind);
  const SabrStudy study = run_sabr_study(
      cfg.model, cfg.grids, cfg.n_ref, cfg.samples, cfg.p, cfg.seed,
      cfg.base_grid_factor, /*with_check=*/false, exec);
  out.total_paths = study.samples;
  out.excluded_paths = study.excluded;

  CsvTable terminal{"strong_error_terminal", {}};
  append_error_rows(terminal, exp, study.standard_terminal, "standard",
                    cfg.seed);
  append_error_rows(terminal, exp, study.tilde_terminal, "accelerated",
                    cfg.seed);
  CsvTable sup{"strong_error_sup", {}};
  append_error_rows(sup, exp, study.standard_sup, "standard", cfg.seed);
  append_error_rows(sup, exp, study.tilde_sup, "accelerated", cfg.seed);
  out.tables.push_back(std::move(terminal));
  out.tables.push_back(std::move(sup));
  return out;
}

DriverOutput drive_nu_sweep(const ExperimentConfig& cfg, Exec exec) {
  DriverOutput out;
  const char* exp = experiment_name(cfg.kind);
  CsvTable table{"nu_sweep", {}};
  for (double nu : cfg.nu_values) {
    const SabrParams point(cfg.model.s0, cfg.model.beta, cfg.model.alpha0, nu,
                           cfg.model.rho, cfg.model.horizon);
    const SabrStudy study =
        run_sabr_study(point, cfg.grids, cfg.n_ref, cfg.samples, cfg.p,
                       cfg.seed, cfg.base_grid_factor, false, exec);
    out.total_paths += study.samples;
    out.excluded_paths += study.excluded;
    const std::string tag = "_nu" + fmt_g(nu);
    append_error_rows(table, exp, study.standard_terminal, "standard" + tag,
                      cfg.seed);
    append_error_rows(table, exp, study.tilde_terminal, "accelerated" + tag,
                      cfg.seed);
    append_ratio_rows(table, exp, study.standard_terminal,
                      study.tilde_terminal, "ratio" + tag, cfg.seed);
  }
  out.tables.push_back(std::move(table));
  return out;
}

DriverOutput drive_beta_sweep(const ExperimentConfig& cfg, Exec exec) {
  DriverOutput out;
  const char* exp = experiment_name(cfg.kind);
  CsvTable table{"beta_sweep", {}};
  for (double beta : cfg.beta_values) {
    // alpha0 is rescaled per beta so the lognormal proxy vol stays fixed and
    // the sweep compares like with like.
    const SabrParams point(cfg.model.s0, beta, 0.0, cfg.model.nu,
                           cfg.model.rho, cfg.model.horizon);
    const SabrStudy study =
        run_sabr_study(point, cfg.grids, cfg.n_ref, cfg.samples, cfg.p,
                       cfg.seed, cfg.base_grid_factor, /*with_check=*/true,
                       exec);
    out.total_paths += study.samples;
    out.excluded_paths += study.excluded;
    const std::string tag = "_beta" + fmt_g(beta);
    append_error_rows(table, exp, study.standard_terminal, "standard" + tag,
                      cfg.seed);
    append_error_rows(table, exp, study.tilde_terminal, "tilde" + tag,
                      cfg.seed);
    append_error_rows(table, exp, study.check_terminal, "check" + tag,
                      cfg.seed);
    append_ratio_rows(table, exp, study.standard_terminal,
                      study.tilde_terminal, "ratio_tilde" + tag, cfg.seed);
    append_ratio_rows(table, exp, study.standard_terminal,
                      study.check_terminal, "ratio_check" + tag, cfg.seed);
  }
  out.tables.push_back(std::move(table));
  return out;
}

double resolve_expectation(const ExperimentConfig& cfg, bool smooth_part) {
  const auto& pinned = smooth_part ? cfg.mlmc.base_expectation_smooth
                                   : cfg.mlmc.base_expectation;
  if (pinned) return *pinned;
  return auto_base_expectation(cfg.model, cfg.payoff, smooth_part);
}

DriverOutput drive_mlmc_diagnostics(const ExperimentConfig& cfg, Exec exec) {
  DriverOutput out;
  const char* exp = experiment_name(cfg.kind);
  CsvTable table{"mlmc_diagnostics", {}};

  const SdeModel model = sabr_logvol_model(cfg.model);
  const Payoff payoff = make_payoff(cfg.payoff);
  const bool is_digital = cfg.payoff.type == "digital";
  std::optional<LocalizedPayoff> localized;
  if (is_digital) localized = make_localized(cfg.payoff);

  const double base_exp = resolve_expectation(cfg, false);
  const double base_exp_smooth = is_digital ? resolve_expectation(cfg, true)
                                            : base_exp;
  const LevelSpec spec(cfg.mlmc.base, cfg.mlmc.max_level, cfg.model.horizon);

  const std::vector<LevelDiagRow> rows = level_diagnostics(
      model, cfg.model.nu, payoff, localized ? &*localized : nullptr, base_exp,
      base_exp_smooth, spec, cfg.samples, cfg.seed, exec);

  for (const LevelDiagRow& r : rows) {
    const double mean_se =
        r.samples > 0 ? r.std_delta / std::sqrt(double(r.samples)) : 0.0;
    const double std_se =
        r.samples > 1 ? r.std_delta / std::sqrt(2.0 * double(r.samples - 1))
                      : 0.0;
    table.rows.push_back({exp, "mean_" + r.estimator, r.level, r.mean_delta,
                          mean_se, r.samples, cfg.seed});
    table.rows.push_back({exp, "std_" + r.estimator, r.level, r.std_delta,
                          std_se, r.samples, cfg.seed});
    if (r.estimator == "standard") {
      out.total_paths += r.samples + r.exclusions;
      out.excluded_paths += r.exclusions;
    }
  }
  out.tables.push_back(std::move(table));
  return out;
}

DriverOutput drive_mlmc_price(const ExperimentConfig& cfg, Exec exec) {
  DriverOutput out;
  const char* exp = experiment_name(cfg.kind);
  CsvTable table{"mlmc_price", {}};

  const SdeModel model = sabr_logvol_model(cfg.model);
  const Payoff payoff = make_payoff(cfg.payoff);
  const LevelSpec spec(cfg.mlmc.base, cfg.mlmc.max_level, cfg.model.horizon);
  const AllocationRule rule = cfg.mlmc.allocation == "paper"
                                  ? AllocationRule::Paper
                                  : AllocationRule::CostOptimal;

  for (const std::string& name : cfg.mlmc.estimators) {
    MlmcReport report;
    if (name == "standard") {
      report = run_mlmc(model, cfg.model.nu, payoff, 0.0, spec,
                        cfg.mlmc.target_rmse, Estimator::Standard, cfg.seed,
                        cfg.mlmc.pilot, rule, exec);
    } else if (name == "accelerated") {
      report = run_mlmc(model, cfg.model.nu, payoff,
                        resolve_expectation(cfg, false), spec,
                        cfg.mlmc.target_rmse, Estimator::Accelerated, cfg.seed,
                        cfg.mlmc.pilot, rule, exec);
    } else {
      report = run_mlmc(model, cfg.model.nu, make_localized(cfg.payoff),
                        resolve_expectation(cfg, true), spec,
                        cfg.mlmc.target_rmse, cfg.seed, cfg.mlmc.pilot, rule,
                        exec);
    }
    for (const LevelStats& s : report.levels) {
      table.rows.push_back({exp, "samples_" + name, s.level, double(s.samples),
                            0.0, s.samples, cfg.seed});
      const double se =
          s.samples > 0 ? std::sqrt(s.var_delta / double(s.samples)) : 0.0;
      table.rows.push_back({exp, "delta_" + name, s.level, s.mean_delta, se,
                            s.samples, cfg.seed});
      out.total_paths += s.samples + s.exclusions;
      out.excluded_paths += s.exclusions;
    }
    table.rows.push_back({exp, "estimate_" + name, -1, report.total_estimate,
                          report.total_std_error, report.pilot_size,
                          cfg.seed});
    table.rows.push_back({exp, "cost_" + name, -1, report.total_cost, 0.0,
                          report.pilot_size, cfg.seed});
  }
  out.tables.push_back(std::move(table));
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir, Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  if (config.threads > 0) set_max_threads(config.threads);
  std::filesystem::create_directories(out_dir);

  DriverOutput output;
  switch (config.kind) {
    case ExperimentKind::PathDemo:
      output = drive_path_demo(config);
      break;
    case ExperimentKind::StrongError:
      output = drive_strong_error(config, exec);
      break;
    case ExperimentKind::NuSweep:
      output = drive_nu_sweep(config, exec);
      break;
    case ExperimentKind::BetaSweep:
      output = drive_beta_sweep(config, exec);
      break;
    case ExperimentKind::MlmcDiagnostics:
      output = drive_mlmc_diagnostics(config, exec);
      break;
    case ExperimentKind::MlmcPrice:
      output = drive_mlmc_price(config, exec);
      break;
  }

  ExperimentResult result;
  result.total_paths = output.total_paths;
  result.excluded_paths = output.excluded_paths;
  const auto elapsed = std::chrono::steady_clock::now() - start;
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(elapsed).count();

  const std::string hash = fnv1a_hex(canonical_config(config));
  char elapsed_buf[64];
  std::snprintf(elapsed_buf, sizeof(elapsed_buf), "elapsed_ms %.3f",
                result.elapsed_ms);
  const std::vector<std::string> manifest = {
      kVersion,
      std::string("experiment ") + experiment_name(config.kind),
      "config_hash " + hash,
      "seed " + std::to_string(config.seed),
      "paths_excluded " + std::to_string(result.excluded_paths) + " of " +
          std::to_string(result.total_paths),
      elapsed_buf,
  };

  for (const CsvTable& table : output.tables) {
    const std::filesystem::path path =
        std::filesystem::path(out_dir) / (table.name + ".csv");
    std::ofstream file(path);
    if (!file)
      throw std::runtime_error("cannot write " + path.string());
    file << render_csv(table, manifest);
    file.close();
    result.files_written.push_back(path.string());
  }

  if (result.total_paths > 0 &&
      result.excluded_paths * 100 > result.total_paths)
    result.exit_code = 3;
  return result;
}

}  // namespace accelmc
