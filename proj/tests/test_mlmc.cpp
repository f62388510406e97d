#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "accelmc/brownian.hpp"
#include "accelmc/mlmc.hpp"
#include "accelmc/models.hpp"
#include "accelmc/payoffs.hpp"
#include "accelmc/schemes.hpp"

using namespace accelmc;

namespace {

Payoff zero_payoff() {
  Payoff p;
  p.evaluate = [](double) { return 0.0; };
  p.regularity = Payoff::Regularity::C2Bounded;
  p.label = "zero";
  p.grad_bound = 0.0;
  p.hess_bound = 0.0;
  return p;
}

}  // namespace

TEST_CASE("level spec geometry and validation") {
  const LevelSpec spec(4, 3, 1.0);
  CHECK(spec.grid_size(0) == 1);
  CHECK(spec.grid_size(1) == 4);
  CHECK(spec.grid_size(3) == 64);
  CHECK_THROWS_AS(spec.grid_size(4), std::invalid_argument);
  CHECK_THROWS_AS(spec.grid_size(-1), std::invalid_argument);
  CHECK_THROWS_AS(LevelSpec(1, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LevelSpec(4, -1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LevelSpec(4, 3, 0.0), std::invalid_argument);
}

TEST_CASE("suggested level count follows the log rule") {
  CHECK(suggest_max_level(0.1, 4) == 2);   // ceil(log4 10)
  CHECK(suggest_max_level(0.1, 2) == 4);   // ceil(log2 10)
  CHECK(suggest_max_level(0.1, 4, 2) == 4);
  CHECK(suggest_max_level(1.0, 4, -3) == 0);  // floored
  CHECK_THROWS_AS(suggest_max_level(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(suggest_max_level(0.1, 1), std::invalid_argument);
}

TEST_CASE("sample allocation closed forms") {
  // single level, unit variance, gamma = 0.1: N_0 = 2 * 1 * 100 = 200
  const LevelSpec single(4, 0, 1.0);
  const std::vector<double> v0 = {1.0};
  CHECK(allocate_samples(v0, single, 0.1, AllocationRule::Paper) ==
        std::vector<std::int64_t>{200});
  CHECK(allocate_samples(v0, single, 0.1, AllocationRule::CostOptimal) ==
        std::vector<std::int64_t>{200});

  // V_l = 4^-l over four levels: cost-optimal counts drop 4x per level
  const LevelSpec four(4, 3, 1.0);
  const std::vector<double> decaying = {1.0, 0.25, 0.0625, 0.015625};
  const auto opt =
      allocate_samples(decaying, four, 0.1, AllocationRule::CostOptimal);
  CHECK(opt == std::vector<std::int64_t>{800, 200, 50, 13});

  // all-zero variances floor every level at two samples
  const std::vector<double> zeros(4, 0.0);
  CHECK(allocate_samples(zeros, four, 0.1, AllocationRule::Paper) ==
        std::vector<std::int64_t>{2, 2, 2, 2});
  CHECK(allocate_samples(zeros, four, 0.1, AllocationRule::CostOptimal) ==
        std::vector<std::int64_t>{2, 2, 2, 2});

  CHECK_THROWS_AS(allocate_samples(v0, four, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(allocate_samples(decaying, four, 0.0),
                  std::invalid_argument);
  const std::vector<double> neg = {1.0, -0.1, 0.1, 0.1};
  CHECK_THROWS_AS(allocate_samples(neg, four, 0.1), std::invalid_argument);
}

TEST_CASE("both allocation rules meet the half-budget") {
  const LevelSpec four(4, 3, 1.0);
  const double gamma = 0.1, half_budget = gamma * gamma / 2.0;
  // a slowly decaying profile stresses AllocationRule::Paper's max() guard
  const std::vector<double> slow = {1.0, 0.9, 0.8, 0.7};
  for (auto rule : {AllocationRule::Paper, AllocationRule::CostOptimal}) {
    const auto alloc = allocate_samples(slow, four, gamma, rule);
    double realized = 0.0;
    for (std::size_t l = 0; l < alloc.size(); ++l)
      realized += slow[l] / static_cast<double>(alloc[l]);
    CHECK(realized <= half_budget * (1.0 + 1e-12));
  }
}

TEST_CASE("level draws are pure and stream-disjoint") {
  const LevelSpec spec(4, 3, 1.0);
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);

  const double a = sample_level_standard(model, 0.0, call, 2, spec, 99, 7);
  const double b = sample_level_standard(model, 0.0, call, 2, spec, 99, 7);
  CHECK(a == b);
  const double other_level =
      sample_level_standard(model, 0.0, call, 3, spec, 99, 7);
  CHECK(a != other_level);
  const double other_path =
      sample_level_standard(model, 0.0, call, 2, spec, 99, 8);
  CHECK(a != other_path);

  CHECK_THROWS_AS(sample_level_standard(model, 0.0, call, 2, spec, 99,
                                        1ull << 48),
                  std::invalid_argument);
}

TEST_CASE("accelerated draws collapse exactly at eps = 0") {
  const LevelSpec spec(4, 2, 1.0);
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);
  const double c = 17.25;
  for (std::uint64_t j = 0; j < 50; ++j) {
    CHECK(sample_level_new(model, 0.0, call, c, 0, spec, 3, j) == c);
    CHECK(sample_level_new(model, 0.0, call, c, 1, spec, 3, j) == 0.0);
    CHECK(sample_level_new(model, 0.0, call, c, 2, spec, 3, j) == 0.0);
  }
}

TEST_CASE("localized draws degenerate to their endpoints") {
  const LevelSpec spec(4, 2, 1.0);
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);
  const double eps = 0.05, c = 15.0;

  // smooth part equal to the whole payoff: identical to the accelerated draw
  const LocalizedPayoff self = localize(call, call);
  for (std::uint64_t j = 0; j < 20; ++j)
    for (int l = 0; l <= 2; ++l)
      CHECK(sample_level_localized(model, eps, self, c, l, spec, 5, j) ==
            sample_level_new(model, eps, call, c, l, spec, 5, j));

  // vanishing smooth part: identical to the standard draw
  const LocalizedPayoff none = localize(call, zero_payoff());
  for (std::uint64_t j = 0; j < 20; ++j)
    for (int l = 0; l <= 2; ++l)
      CHECK(sample_level_localized(model, eps, none, 0.0, l, spec, 5, j) ==
            sample_level_standard(model, eps, call, l, spec, 5, j));
}

TEST_CASE("mlmc total telescopes to a single-level estimate") {
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);
  const LevelSpec spec(4, 3, 1.0);
  const double gamma = 0.25;

  const MlmcReport report =
      run_mlmc(model, 0.0, call, 0.0, spec, gamma, Estimator::Standard, 501);
  REQUIRE(report.levels.size() == 4);
  CHECK(report.estimator_label == "standard");

  // independent brute-force estimate of E[f(X_bar at n = 64)]
  const int m = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int j = 0; j < m; ++j) {
    const auto lat = sample_lattice(777, static_cast<std::uint64_t>(j), 64, 1,
                                    1.0);
    const double v =
        call.evaluate(euler_maruyama(model, 0.0, lat).terminal()[0]);
    sum += v;
    sum2 += v * v;
  }
  const double single = sum / m;
  const double se_single = std::sqrt((sum2 / m - single * single) / m);
  const double band = 3.0 * std::sqrt(se_single * se_single +
                                      report.total_std_error *
                                          report.total_std_error);
  CHECK(std::fabs(report.total_estimate - single) < band);

  // report arithmetic holds together
  double est = 0.0, cost = 0.0, var_sum = 0.0;
  for (const LevelStats& row : report.levels) {
    est += row.mean_delta;
    cost += row.cost;
    var_sum += row.var_delta / static_cast<double>(row.samples);
    CHECK(row.cost == static_cast<double>(row.samples) *
                          static_cast<double>(spec.grid_size(row.level)));
    CHECK(row.exclusions == 0);
  }
  CHECK(report.total_estimate == Catch::Approx(est).epsilon(1e-15));
  CHECK(report.total_cost == Catch::Approx(cost).epsilon(1e-15));
  CHECK(report.total_std_error ==
        Catch::Approx(std::sqrt(var_sum)).epsilon(1e-12));

  // realized main-pass variance stays inside the slacked budget
  CHECK(var_sum <= 1.25 * gamma * gamma);
}

TEST_CASE("accelerated telescoping matches its own single-level form") {
  const SabrParams params(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
  const auto model = sabr_logvol_model(params);
  const Payoff call = european_call(100.0);
  const LevelSpec spec(4, 2, 1.0);
  const double c = gbm_call_price(100.0, 100.0, params.base_vol(), 1.0);
  const double gamma = 0.25;

  const MlmcReport report = run_mlmc(model, params.nu, call, c, spec, gamma,
                                     Estimator::Accelerated, 601);

  // single level: E[f(X_eps) - f(X_0)] at n = 16 plus the analytic base term
  const int m = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (int j = 0; j < m; ++j) {
    const auto lat = sample_lattice(888, static_cast<std::uint64_t>(j), 16, 2,
                                    1.0);
    const double at_eps =
        call.evaluate(euler_maruyama(model, params.nu, lat).terminal()[0]);
    const double at_zero =
        call.evaluate(euler_maruyama(model, 0.0, lat).terminal()[0]);
    const double v = at_eps - at_zero;
    sum += v;
    sum2 += v * v;
  }
  const double single = sum / m + c;
  const double se_single = std::sqrt((sum2 / m - (sum / m) * (sum / m)) / m);
  const double band = 3.0 * std::sqrt(se_single * se_single +
                                      report.total_std_error *
                                          report.total_std_error);
  CHECK(std::fabs(report.total_estimate - single) < band);
}

TEST_CASE("mlmc argument validation") {
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);
  const LevelSpec spec(4, 1, 1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CHECK_THROWS_AS(run_mlmc(model, 0.0, call, 0.0, spec, 0.1,
                           Estimator::Standard, 1, 50),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_mlmc(model, 0.0, call, 0.0, spec, 0.0,
                           Estimator::Standard, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_mlmc(model, 0.0, call, nan, spec, 0.1,
                           Estimator::Accelerated, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_mlmc(model, 0.0, call, 0.0, spec, 0.1,
                           Estimator::Localized, 1),
                  std::invalid_argument);
  const LocalizedPayoff split = localize(call, call);
  CHECK_THROWS_AS(run_mlmc(model, 0.0, split, nan, spec, 0.1, 1),
                  std::invalid_argument);
}

TEST_CASE("reports are reproducible and level draws are independent") {
  const auto model = perturbed_gbm(0.4, 100.0);
  const Payoff call = european_call(100.0);
  const LevelSpec spec(4, 2, 1.0);

  const MlmcReport a =
      run_mlmc(model, 0.05, call, 40.0, spec, 0.3, Estimator::Accelerated, 9);
  const MlmcReport b =
      run_mlmc(model, 0.05, call, 40.0, spec, 0.3, Estimator::Accelerated, 9);
  REQUIRE(a.levels.size() == b.levels.size());
  CHECK(a.total_estimate == b.total_estimate);
  CHECK(a.total_std_error == b.total_std_error);
  CHECK(a.total_cost == b.total_cost);
  for (std::size_t l = 0; l < a.levels.size(); ++l) {
    CHECK(a.levels[l].mean_delta == b.levels[l].mean_delta);
    CHECK(a.levels[l].var_delta == b.levels[l].var_delta);
    CHECK(a.levels[l].samples == b.levels[l].samples);
  }

  // a level's diagnostics never depend on how many levels surround it
  const auto shallow = level_diagnostics(model, 0.05, call, nullptr, 40.0,
                                         0.0, LevelSpec(4, 1, 1.0), 1000, 13);
  const auto deep = level_diagnostics(model, 0.05, call, nullptr, 40.0, 0.0,
                                      LevelSpec(4, 3, 1.0), 1000, 13);
  REQUIRE(shallow.size() == 4);   // 2 estimators x 2 levels
  REQUIRE(deep.size() == 8);
  for (std::size_t i = 0; i < shallow.size(); ++i) {
    CHECK(shallow[i].estimator == deep[i].estimator);
    CHECK(shallow[i].mean_delta == deep[i].mean_delta);
    CHECK(shallow[i].std_delta == deep[i].std_delta);
  }
}

TEST_CASE("level diagnostics pair estimators on shared draws") {
  const SabrParams params(100.0, 1.0, 0.16, 0.1, -0.6, 1.0);
  const auto model = sabr_logvol_model(params);
  const Payoff call = european_call(100.0);
  const double c = gbm_call_price(100.0, 100.0, params.base_vol(), 1.0);
  const LevelSpec spec(4, 2, 1.0);
  const LocalizedPayoff split = localize(call, call);

  const auto rows = level_diagnostics(model, params.nu, call, &split, c, c,
                                      spec, 2000, 17);
  REQUIRE(rows.size() == 9);  // 3 estimators x 3 levels
  for (int l = 0; l <= 2; ++l) {
    const auto& std_row = rows[static_cast<std::size_t>(3 * l)];
    const auto& acc_row = rows[static_cast<std::size_t>(3 * l + 1)];
    const auto& loc_row = rows[static_cast<std::size_t>(3 * l + 2)];
    CHECK(std_row.estimator == "standard");
    CHECK(acc_row.estimator == "accelerated");
    CHECK(loc_row.estimator == "localized");
    CHECK(std_row.level == l);
    CHECK(std_row.samples == acc_row.samples);
    CHECK(std_row.exclusions == acc_row.exclusions);
    // smooth part == payoff makes localized and accelerated the same draw
    CHECK(loc_row.mean_delta == acc_row.mean_delta);
    CHECK(loc_row.std_delta == acc_row.std_delta);
    // the control variate cannot lose at matched sample counts here
    CHECK(acc_row.std_delta < std_row.std_delta);
  }

  CHECK_THROWS_AS(level_diagnostics(model, params.nu, call, nullptr, c, 0.0,
                                    spec, 500, 17),
                  std::invalid_argument);
}

TEST_CASE("exploded draws are excluded and counted") {
  // post_step poisons any state beyond the threshold, a deterministic stand-in
  // for CEV explosions
  SdeModel fragile;
  fragile.state_dim = 1;
  fragile.factor_dim = 1;
  fragile.initial_state = {0.0};
  fragile.label = "fragile";
  fragile.drift = [](std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  fragile.diffusion = [](std::span<const double>, double,
                         std::span<double> out) { out[0] = 1.0; };
  fragile.post_step = [](std::span<double> x) {
    if (x[0] > 0.5) x[0] = std::numeric_limits<double>::quiet_NaN();
  };

  Payoff id;
  id.evaluate = [](double x) { return x; };
  id.label = "identity";

  const LevelSpec spec(4, 1, 1.0);
  const auto rows =
      level_diagnostics(fragile, 0.0, id, nullptr, 0.0, 0.0, spec, 2000, 23);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.exclusions > 0);
    CHECK(row.samples + row.exclusions == 2000);
    CHECK(std::isfinite(row.mean_delta));
  }
  // both estimators see the same explosions at a level
  CHECK(rows[0].exclusions == rows[1].exclusions);
}
