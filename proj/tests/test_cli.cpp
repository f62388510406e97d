#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "accelmc/csv.hpp"
#include "accelmc/experiments.hpp"
#include "accelmc/models.hpp"

using namespace accelmc;
namespace fs = std::filesystem;

namespace {

fs::path out_root() {
  const fs::path root = fs::temp_directory_path() / "accelmc_cli_tests";
  fs::create_directories(root);
  return root;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// data body only: everything after the '#' manifest block
std::string body_of(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line, body;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line;
    body += '\n';
  }
  return body;
}

std::vector<std::string> body_lines(const fs::path& p) {
  std::istringstream in(body_of(p));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

bool has_error_containing(const ValidateResult& r, const std::string& what) {
  for (const std::string& e : r.errors)
    if (e.find(what) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("experiment names round-trip") {
  const ExperimentKind kinds[] = {
      ExperimentKind::PathDemo,       ExperimentKind::StrongError,
      ExperimentKind::NuSweep,        ExperimentKind::BetaSweep,
      ExperimentKind::MlmcDiagnostics, ExperimentKind::MlmcPrice,
  };
  for (ExperimentKind k : kinds) {
    const std::string name = experiment_name(k);
    const auto parsed = parse_experiment_name(name);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == k);
  }
  CHECK(parse_experiment_name("strong_error") == ExperimentKind::StrongError);
  CHECK_FALSE(parse_experiment_name("frobnicate").has_value());
  CHECK_FALSE(parse_experiment_name("").has_value());
}

TEST_CASE("csv body is canonical") {
  CsvTable t;
  t.name = "probe";
  t.rows.push_back({"exp", "beta", 16, 1.5, 0.25, 100, 7});
  t.rows.push_back({"exp", "alpha", 32, 2.0, 0.5, 100, 7});
  t.rows.push_back({"exp", "alpha", 8, 0.1, 0.0, 100, 7});
  const std::string body = render_csv_body(t);

  std::istringstream in(body);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "experiment,label,n_or_level,value,std_error,samples,seed,"
        "wall_time_ms");
  // rows come out sorted by (label, n) and close with a zeroed timing field
  std::getline(in, line);
  CHECK(line == "exp,alpha,8,0.10000000000000001,0,100,7,0");
  std::getline(in, line);
  CHECK(line == "exp,alpha,32,2,0.5,100,7,0");
  std::getline(in, line);
  CHECK(line == "exp,beta,16,1.5,0.25,100,7,0");
  CHECK_FALSE(std::getline(in, line));

  // %.17g keeps doubles exact through a text round-trip
  CsvTable f;
  f.name = "float";
  const double tricky = 0.1 + 0.2;
  f.rows.push_back({"exp", "x", 1, tricky, 0.0, 1, 1});
  const std::string rendered = render_csv_body(f);
  const auto pos = rendered.find("x,1,") + 4;
  const double back = std::stod(rendered.substr(pos));
  CHECK(back == tricky);

  // manifest lines ride above the body, each marked with '#'
  const std::string full = render_csv(t, {"one", "two"});
  CHECK(full.rfind("# one\n# two\n", 0) == 0);
  CHECK(full.substr(full.find("experiment,")) == body);
}

TEST_CASE("fnv1a matches known digests") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("abc") == "e71fa2190541574b");
  CHECK(fnv1a_hex("abd") != fnv1a_hex("abc"));
}

TEST_CASE("defaults vary by experiment kind") {
  const ExperimentConfig se = default_config(ExperimentKind::StrongError);
  CHECK(se.grids == std::vector<std::int64_t>{8, 16, 32, 64, 128, 256});
  CHECK(se.n_ref == (std::int64_t{1} << 14));
  CHECK(se.samples == 10000);
  CHECK(se.seed == 42);
  CHECK(se.model.beta == 0.9);

  const ExperimentConfig diag =
      default_config(ExperimentKind::MlmcDiagnostics);
  CHECK(diag.samples == 100000);
  CHECK(diag.model.beta == 1.0);
  CHECK(diag.model.alpha0 == 0.16);

  const ExperimentConfig price = default_config(ExperimentKind::MlmcPrice);
  CHECK(price.model.beta == 1.0);
  CHECK(price.mlmc.target_rmse == 0.1);
  CHECK(price.mlmc.allocation == "cost_optimal");
}

TEST_CASE("canonical form ignores spelling and thread count") {
  const auto empty = validate_config(ExperimentKind::StrongError, "{}");
  REQUIRE(empty.ok());
  const std::string base = canonical_config(*empty.config);
  CHECK(base == canonical_config(default_config(ExperimentKind::StrongError)));

  // spelling out defaults in any order changes nothing
  const auto spelled = validate_config(
      ExperimentKind::StrongError,
      R"({"seed": 42, "samples": 10000, "experiment": "strong_error",
          "model": {"beta": 0.9, "s0": 100.0}, "threads": 3})");
  REQUIRE(spelled.ok());
  CHECK(canonical_config(*spelled.config) == base);
  CHECK(fnv1a_hex(canonical_config(*spelled.config)) == fnv1a_hex(base));
  CHECK(spelled.config->threads == 3);

  // a real change moves the hash
  const auto moved =
      validate_config(ExperimentKind::StrongError, R"({"seed": 43})");
  REQUIRE(moved.ok());
  CHECK(fnv1a_hex(canonical_config(*moved.config)) != fnv1a_hex(base));
}

TEST_CASE("config validation rejects and aggregates") {
  // malformed JSON
  const auto bad = validate_config(ExperimentKind::StrongError, "{oops");
  CHECK_FALSE(bad.ok());
  CHECK_FALSE(bad.config.has_value());

  // unknown keys are spelled with their path
  const auto unknown = validate_config(
      ExperimentKind::StrongError,
      R"({"frobnicate": 1, "model": {"gamma": 2.0}})");
  CHECK_FALSE(unknown.ok());
  CHECK(has_error_containing(unknown, "frobnicate: unknown key"));
  CHECK(has_error_containing(unknown, "model.gamma: unknown key"));
  CHECK(unknown.errors.size() == 2);  // both reported at once

  // the experiment tag must agree with the subcommand
  const auto mismatch = validate_config(ExperimentKind::StrongError,
                                        R"({"experiment": "nu_sweep"})");
  CHECK_FALSE(mismatch.ok());
  CHECK(has_error_containing(mismatch, "experiment"));

  // type and range problems carry their key path
  const auto typed = validate_config(
      ExperimentKind::StrongError,
      R"({"samples": "many", "p": 0.5, "grids": [8, 12]})");
  CHECK_FALSE(typed.ok());
  CHECK(has_error_containing(typed, "samples"));
  CHECK(has_error_containing(typed, "p"));
  CHECK(has_error_containing(typed, "grids"));  // 12 does not divide n_ref

  const auto semantic = validate_config(
      ExperimentKind::StrongError,
      R"({"model": {"beta": 1.5, "s0": -1.0}, "samples": 1})");
  CHECK_FALSE(semantic.ok());
  CHECK(has_error_containing(semantic, "model"));
  CHECK(has_error_containing(semantic, "samples"));

  // payoff and mlmc blocks
  const auto payoff = validate_config(ExperimentKind::MlmcPrice,
                                      R"({"payoff": {"type": "put"}})");
  CHECK(has_error_containing(payoff, "payoff.type"));

  const auto alloc = validate_config(
      ExperimentKind::MlmcPrice, R"({"mlmc": {"allocation": "greedy"}})");
  CHECK(has_error_containing(alloc, "mlmc.allocation"));

  // localized sampling only makes sense for a digital payoff
  const auto loc = validate_config(
      ExperimentKind::MlmcDiagnostics,
      R"({"mlmc": {"estimators": ["standard", "localized"]}})");
  CHECK(has_error_containing(loc, "estimators"));

  // away from beta = 1 the base expectation cannot be derived
  const auto beta_pin = validate_config(
      ExperimentKind::MlmcPrice, R"({"model": {"beta": 0.9}})");
  CHECK_FALSE(beta_pin.ok());
  const auto beta_pinned = validate_config(
      ExperimentKind::MlmcPrice,
      R"({"model": {"beta": 0.9},
          "mlmc": {"estimators": ["standard"]}})");
  CHECK(beta_pinned.ok());

  // nu and beta sweep grids have their own ranges
  CHECK_FALSE(validate_config(ExperimentKind::NuSweep,
                              R"({"nu_values": [0.1, -0.2]})")
                  .ok());
  CHECK_FALSE(validate_config(ExperimentKind::BetaSweep,
                              R"({"beta_values": [0.9, 1.2]})")
                  .ok());

  // path_demo grid must divide the reference grid
  CHECK_FALSE(validate_config(ExperimentKind::PathDemo,
                              R"({"demo_n": 24})")
                  .ok());
}

TEST_CASE("auto base expectation uses the lognormal closed forms") {
  const SabrParams gbm(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
  PayoffSpec call;
  CHECK(auto_base_expectation(gbm, call, false) ==
        gbm_call_price(100.0, 100.0, 0.4, 1.0));
  PayoffSpec dig;
  dig.type = "digital";
  CHECK(auto_base_expectation(gbm, dig, false) ==
        gbm_digital_price(100.0, 100.0, 0.4, 1.0));
  CHECK(auto_base_expectation(gbm, dig, true) ==
        gbm_smoothed_digital_price(100.0, 100.0, 1.0, 0.4, 1.0));

  const SabrParams cev(100.0, 0.9, 0.0, 0.1, -0.6, 1.0);
  CHECK_THROWS_AS(auto_base_expectation(cev, call, false),
                  std::invalid_argument);
}

TEST_CASE("strong error experiment writes deterministic tables") {
  auto cfg = default_config(ExperimentKind::StrongError);
  cfg.grids = {8, 16, 32};
  cfg.n_ref = 256;
  cfg.samples = 300;
  cfg.seed = 7;

  const fs::path dir_a = out_root() / "se_a";
  const fs::path dir_b = out_root() / "se_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  const ExperimentResult ra = run_experiment(cfg, dir_a.string());
  CHECK(ra.exit_code == 0);
  CHECK(ra.total_paths == 300);
  CHECK(ra.excluded_paths == 0);
  REQUIRE(ra.files_written.size() == 2);

  const fs::path term = dir_a / "strong_error_terminal.csv";
  const fs::path sup = dir_a / "strong_error_sup.csv";
  REQUIRE(fs::exists(term));
  REQUIRE(fs::exists(sup));

  // 1 header + 2 labels x 3 grids
  const auto lines = body_lines(term);
  REQUIRE(lines.size() == 7);
  int accelerated = 0, standard = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].find(",accelerated,") != std::string::npos) ++accelerated;
    if (lines[i].find(",standard,") != std::string::npos) ++standard;
    CHECK(lines[i].substr(lines[i].size() - 2) == ",0");
  }
  CHECK(accelerated == 3);
  CHECK(standard == 3);

  // the manifest carries version, hash, seed and timing
  const std::string full = read_file(term);
  CHECK(full.find("# accelmc") == 0);
  CHECK(full.find("config_hash") != std::string::npos);
  CHECK(full.find("seed 7") != std::string::npos);

  // identical bytes on a second run and under the serial executor
  run_experiment(cfg, dir_b.string(), Exec::Serial);
  CHECK(body_of(term) == body_of(dir_b / "strong_error_terminal.csv"));
  CHECK(body_of(sup) == body_of(dir_b / "strong_error_sup.csv"));

  // a different seed produces different numbers
  auto other = cfg;
  other.seed = 8;
  const fs::path dir_c = out_root() / "se_c";
  fs::remove_all(dir_c);
  run_experiment(other, dir_c.string());
  CHECK(body_of(term) != body_of(dir_c / "strong_error_terminal.csv"));
}

TEST_CASE("path demo lays out aligned grid indices") {
  auto cfg = default_config(ExperimentKind::PathDemo);
  cfg.n_ref = 1024;
  cfg.demo_n = 16;
  cfg.seed = 3;
  const fs::path dir = out_root() / "demo";
  fs::remove_all(dir);
  const ExperimentResult r = run_experiment(cfg, dir.string());
  CHECK(r.exit_code == 0);
  REQUIRE(r.files_written.size() == 1);

  const auto lines = body_lines(dir / "path_demo.csv");
  // header + reference on 256 points + standard and accelerated on 16
  REQUIRE(lines.size() == 1 + 257 + 17 + 17);
  int reference = 0;
  for (const std::string& l : lines)
    if (l.find(",reference,") != std::string::npos) ++reference;
  CHECK(reference == 257);
  // coarse rows sit on fine-grid indices: stride 1024 / 16 = 64
  bool has_stride_row = false;
  for (const std::string& l : lines)
    if (l.find(",standard,64,") != std::string::npos) has_stride_row = true;
  CHECK(has_stride_row);
}

TEST_CASE("nu sweep emits per-nu ratio rows") {
  auto cfg = default_config(ExperimentKind::NuSweep);
  cfg.grids = {8, 16};
  cfg.n_ref = 128;
  cfg.samples = 200;
  cfg.nu_values = {0.1, 0.5};
  const fs::path dir = out_root() / "nusweep";
  fs::remove_all(dir);
  const ExperimentResult r = run_experiment(cfg, dir.string());
  CHECK(r.exit_code == 0);
  const std::string body = body_of(dir / "nu_sweep.csv");
  for (const char* label :
       {"standard_nu0.1", "accelerated_nu0.1", "ratio_nu0.1",
        "standard_nu0.5", "accelerated_nu0.5", "ratio_nu0.5"})
    CHECK(body.find(label) != std::string::npos);
}

TEST_CASE("beta sweep carries both hybrids and their ratios") {
  auto cfg = default_config(ExperimentKind::BetaSweep);
  cfg.grids = {8, 16};
  cfg.n_ref = 128;
  cfg.samples = 200;
  cfg.beta_values = {0.999, 0.9};
  const fs::path dir = out_root() / "betasweep";
  fs::remove_all(dir);
  const ExperimentResult r = run_experiment(cfg, dir.string());
  CHECK(r.exit_code == 0);
  const std::string body = body_of(dir / "beta_sweep.csv");
  for (const char* label :
       {"standard_beta0.999", "tilde_beta0.9", "check_beta0.9",
        "ratio_tilde_beta0.999", "ratio_check_beta0.9"})
    CHECK(body.find(label) != std::string::npos);
}

TEST_CASE("mlmc experiments write level tables") {
  auto diag = default_config(ExperimentKind::MlmcDiagnostics);
  diag.samples = 1000;
  diag.mlmc.max_level = 1;
  diag.payoff.type = "digital";
  diag.mlmc.estimators = {"standard", "accelerated", "localized"};
  const fs::path ddir = out_root() / "diag";
  fs::remove_all(ddir);
  const ExperimentResult rd = run_experiment(diag, ddir.string());
  CHECK(rd.exit_code == 0);
  const std::string dbody = body_of(ddir / "mlmc_diagnostics.csv");
  for (const char* label : {"mean_standard", "std_standard",
                            "mean_accelerated", "std_localized"})
    CHECK(dbody.find(label) != std::string::npos);

  auto price = default_config(ExperimentKind::MlmcPrice);
  price.mlmc.max_level = 2;
  price.mlmc.target_rmse = 0.4;
  price.mlmc.pilot = 200;
  const fs::path pdir = out_root() / "price";
  fs::remove_all(pdir);
  const ExperimentResult rp = run_experiment(price, pdir.string());
  CHECK(rp.exit_code == 0);
  const std::string pbody = body_of(pdir / "mlmc_price.csv");
  for (const char* label :
       {"samples_standard", "delta_standard", "estimate_standard",
        "cost_standard", "estimate_accelerated"})
    CHECK(pbody.find(label) != std::string::npos);
  // totals sit on the sentinel level -1
  CHECK(pbody.find("estimate_accelerated,-1,") != std::string::npos);
}
