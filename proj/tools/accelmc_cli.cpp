// Experiment runner: one subcommand per experiment, flags overriding the
// JSON config. Exit codes: 0 success, 2 config problem, 3 more than 1% of
// paths excluded.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "accelmc/experiments.hpp"

namespace {

struct CliFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::int64_t samples = 0;
  int threads = -1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accelmc experiment runner"};
  app.require_subcommand(1);

  CliFlags flags;
  const accelmc::ExperimentKind kinds[] = {
      accelmc::ExperimentKind::PathDemo,
      accelmc::ExperimentKind::StrongError,
      accelmc::ExperimentKind::NuSweep,
      accelmc::ExperimentKind::BetaSweep,
      accelmc::ExperimentKind::MlmcDiagnostics,
      accelmc::ExperimentKind::MlmcPrice,
  };
  for (accelmc::ExperimentKind kind : kinds) {
    CLI::App* sub =
        app.add_subcommand(accelmc::experiment_name(kind), "run experiment");
    sub->add_option("--config", flags.config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out_dir, "output directory");
    sub->add_option("--seed", flags.seed, "RNG seed");
    sub->add_option("--samples", flags.samples, "Monte Carlo paths");
    sub->add_option("--threads", flags.threads, "worker threads, 0 = all");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const auto kind = accelmc::parse_experiment_name(sub->get_name());
  if (!kind) {
    std::fprintf(stderr, "unknown experiment '%s'\n", sub->get_name().c_str());
    return 2;
  }

  std::string config_text = "{}";
  if (!flags.config_path.empty()) {
    std::ifstream file(flags.config_path);
    if (!file) {
      std::fprintf(stderr, "cannot read %s\n", flags.config_path.c_str());
      return 2;
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    config_text = buffer.str();
  }

  accelmc::ValidateResult validated =
      accelmc::validate_config(*kind, config_text);
  if (!validated.ok()) {
    for (const std::string& error : validated.errors)
      std::fprintf(stderr, "config error: %s\n", error.c_str());
    return 2;
  }

  accelmc::ExperimentConfig config = *validated.config;
  const CLI::App* chosen = sub;
  if (chosen->count("--seed") > 0) config.seed = flags.seed;
  if (chosen->count("--samples") > 0) {
    if (flags.samples < 0) {
      std::fprintf(stderr, "config error: samples: must be non-negative\n");
      return 2;
    }
    config.samples = flags.samples;
  }
  if (chosen->count("--threads") > 0) {
    if (flags.threads < 0) {
      std::fprintf(stderr, "config error: threads: must be non-negative\n");
      return 2;
    }
    config.threads = flags.threads;
  }

  try {
    const accelmc::ExperimentResult result =
        accelmc::run_experiment(config, flags.out_dir);
    for (const std::string& file : result.files_written)
      std::printf("wrote %s\n", file.c_str());
    std::printf("paths %lld, excluded %lld\n",
                static_cast<long long>(result.total_paths),
                static_cast<long long>(result.excluded_paths));
    std::printf("elapsed_ms %.1f\n", result.elapsed_ms);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
