#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "epfw/rng.hpp"
#include "epfw/storage.hpp"
#include "support/storage_dp.hpp"

using namespace epfw;

namespace {

std::array<double, 24> two_level_day(double low, double high) {
  std::array<double, 24> p{};
  for (int h = 0; h < 12; ++h) p[h] = low;
  for (int h = 12; h < 24; ++h) p[h] = high;
  return p;
}

std::array<double, 24> random_day(Rng& rng) {
  std::array<double, 24> p{};
  for (auto& v : p) v = rng.uniform(5.0, 80.0);
  return p;
}

}  // namespace

TEST_CASE("flat prices make any cycle unprofitable") {
  std::array<double, 24> p{};
  p.fill(30.0);
  StorageSpec spec{"s", 1.0, 1.0, 0.9};
  const auto plan = plan_day(p, spec);
  CHECK(plan.objective == doctest::Approx(0.0).epsilon(1e-12));
  for (int h = 0; h < 24; ++h) {
    CHECK(plan.charge[h] == doctest::Approx(0.0));
    CHECK(plan.generation[h] == doctest::Approx(0.0));
  }
}

TEST_CASE("worked two-level day: objective 35.0") {
  StorageSpec spec{"s", 1.0, 1.0, 0.9};
  const auto plan = plan_day(two_level_day(10.0, 50.0), spec);
  CHECK(std::abs(plan.objective - 35.0) < 1e-6);
  double total_charge = 0.0, total_gen = 0.0;
  for (int h = 0; h < 24; ++h) {
    total_charge += plan.charge[h];
    total_gen += plan.generation[h];
  }
  CHECK(total_charge == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(total_gen == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("realized profit: identity on the forecast, arithmetic on a swap") {
  StorageSpec spec{"s", 1.0, 1.0, 0.9};
  const auto fcst = two_level_day(10.0, 50.0);
  const auto plan = plan_day(fcst, spec);
  CHECK(realized_profit(plan, fcst) == doctest::Approx(plan.objective).epsilon(1e-9));
  // prices flipped: buy 1 at 50, sell 0.9 at 10
  CHECK(realized_profit(plan, two_level_day(50.0, 10.0)) ==
        doctest::Approx(-41.0).epsilon(1e-6));
  CHECK(realized_profit(StoragePlan{}, fcst) == 0.0);
}

TEST_CASE("plans match the DP oracle within 1% on all three archetypes") {
  Rng rng(2025);
  for (const auto& spec : storage_archetypes()) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto day = random_day(rng);
      const auto plan = plan_day(day, spec);
      const double dp = testing::storage_dp_objective(day, spec);
      REQUIRE(plan.objective >= dp - 1e-9);  // DP is a feasible lower bound
      if (dp > 1e-9)
        REQUIRE(plan.objective == doctest::Approx(dp).epsilon(0.01));
      else
        REQUIRE(plan.objective < 0.01 * spec.cap * spec.ecr * 80.0);
    }
  }
}

TEST_CASE("multi-hour charging appears for the high-ecr archetype") {
  StorageSpec spec{"s1", 1.0, 7.0, 0.75};
  // deep valley at night, peak in the evening
  std::array<double, 24> p{};
  for (int h = 0; h < 24; ++h) p[h] = 40.0;
  for (int h = 0; h < 7; ++h) p[h] = 8.0;
  for (int h = 17; h < 23; ++h) p[h] = 75.0;
  const auto plan = plan_day(p, spec);
  int charge_hours = 0, gen_hours = 0;
  for (int h = 0; h < 24; ++h) {
    if (plan.charge[h] > 1e-6) ++charge_hours;
    if (plan.generation[h] > 1e-6) ++gen_hours;
  }
  CHECK(charge_hours >= 5);
  CHECK(gen_hours >= 5);
  CHECK(plan.objective == doctest::Approx(testing::storage_dp_objective(p, spec))
                              .epsilon(0.01));
}

TEST_CASE("every plan passes the independent feasibility audit") {
  Rng rng(7);
  const StorageSpec spec{"s", 2.0, 3.0, 0.8};
  for (int trial = 0; trial < 20; ++trial) {
    const auto plan = plan_day(random_day(rng), spec);
    CHECK_NOTHROW(check_plan(plan, spec));
    for (int h = 0; h < 24; ++h)
      CHECK(plan.generation[h] * plan.charge[h] == doctest::Approx(0.0));
  }
  // tampered plans are rejected
  auto plan = plan_day(two_level_day(10.0, 50.0), spec);
  auto bad = plan;
  bad.generation[0] = 0.5;  // hour-1 generation from an empty store
  CHECK_THROWS_AS(check_plan(bad, spec), InfeasiblePlan);
  bad = plan;
  bad.level[23] = 1.0;  // not empty at end of day
  CHECK_THROWS_AS(check_plan(bad, spec), InfeasiblePlan);
  bad = plan;
  bad.charge[5] = spec.cap + 1.0;
  CHECK_THROWS_AS(check_plan(bad, spec), InfeasiblePlan);
}

TEST_CASE("scaling all prices scales the objective linearly") {
  Rng rng(12);
  const StorageSpec spec{"s", 1.0, 3.0, 0.8};
  const auto day = random_day(rng);
  const auto base = plan_day(day, spec);
  auto scaled = day;
  for (auto& p : scaled) p *= 2.5;
  const auto plan2 = plan_day(scaled, spec);
  CHECK(plan2.objective == doctest::Approx(2.5 * base.objective).epsilon(1e-9));
  // the original plan remains optimal after rescaling
  CHECK(realized_profit(base, scaled) == doctest::Approx(plan2.objective).epsilon(1e-9));
}

TEST_CASE("backtest: perfect forecast scores factor exactly 1") {
  Rng rng(31);
  std::vector<std::array<double, 24>> actuals;
  for (int d = 0; d < 10; ++d) actuals.push_back(random_day(rng));

  std::map<std::string, std::vector<std::array<double, 24>>> forecasts;
  forecasts["perfect"] = actuals;
  auto noisy = actuals;
  for (auto& day : noisy)
    for (auto& p : day) p += rng.uniform(-10.0, 10.0);
  forecasts["noisy"] = noisy;

  const StorageSpec spec{"s2", 1.0, 3.0, 0.8};
  const auto rows = backtest_storage(forecasts, actuals, spec);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.factor_defined);
    CHECK(r.factor <= 1.0 + 1e-9);
    if (r.model == "perfect") CHECK(r.factor == 1.0);  // bitwise, not approximate
    CHECK(r.archetype == "s2");
  }
}

TEST_CASE("forecasts anti-correlated with the actuals lose money") {
  // the model predicts a cheap-morning/dear-evening day every day, but on
  // four of the five days the actual pattern is inverted, so its plan buys
  // dear and sells cheap
  std::vector<std::array<double, 24>> actuals, predicted;
  actuals.push_back(two_level_day(10.0, 50.0));
  for (int d = 0; d < 4; ++d) actuals.push_back(two_level_day(50.0, 10.0));
  for (int d = 0; d < 5; ++d) predicted.push_back(two_level_day(10.0, 50.0));
  const StorageSpec spec{"s3", 1.0, 1.0, 0.9};
  const auto rows = backtest_storage({{"inverted", predicted}}, actuals, spec);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].factor_defined);  // one aligned day keeps perfect > 0
  CHECK(rows[0].profit_per_mw == doctest::Approx(35.0 - 4 * 41.0).epsilon(1e-6));
  CHECK(rows[0].factor < 0.0);
}

TEST_CASE("backtest validation and CSV output") {
  std::vector<std::array<double, 24>> actuals(3);
  std::map<std::string, std::vector<std::array<double, 24>>> forecasts;
  forecasts["short"] = {actuals[0]};
  const StorageSpec spec{"s", 1.0, 1.0, 0.9};
  CHECK_THROWS_AS(backtest_storage(forecasts, actuals, spec), MisalignedDays);
  CHECK_THROWS_AS(plan_day({}, StorageSpec{"s", 0.0, 1.0, 0.9}), InvalidConfig);

  Rng rng(3);
  std::vector<std::array<double, 24>> days = {random_day(rng), random_day(rng)};
  const auto rows = backtest_storage({{"m", days}}, days, spec);
  std::ostringstream os;
  write_storage_report(rows, os);
  CHECK(os.str().find("model,archetype,profit_per_mw,factor\n") == 0);
  CHECK(os.str().find("m,s,") != std::string::npos);
}
