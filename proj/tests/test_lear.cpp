#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epfw/evaluate.hpp"
#include "epfw/lear.hpp"
#include "epfw/rng.hpp"
#include "epfw/synth.hpp"

using namespace epfw;

namespace {

/// Panel driven by a known linear law: price follows its own one-day lag plus
/// same-day load plus a weekday offset, which is exactly inside the LEAR span.
HourlyPanel planted_panel(int days, double noise_sd, std::uint64_t seed) {
  Rng rng(seed);
  const Date first = make_date(2019, 1, 7);  // a Monday
  std::vector<double> load(days * 24), price(days * 24);
  for (int t = 0; t < days * 24; ++t) {
    const int h = t % 24;
    load[t] = 100.0 + 25.0 * std::sin(2.0 * M_PI * (h - 7) / 24.0) +
              3.0 * rng.normal();
  }
  for (int t = 0; t < days * 24; ++t) {
    const int d = t / 24;
    const int wd = weekday_monday0(first + d);
    const double lag = d == 0 ? 40.0 : price[t - 24];
    price[t] = 5.0 + 0.6 * lag + 0.3 * load[t] + (wd >= 5 ? -4.0 : 0.0) +
               noise_sd * rng.normal();
  }
  std::map<std::string, std::vector<double>> s;
  s["price"] = std::move(price);
  s["load"] = std::move(load);
  return HourlyPanel(first, std::move(s));
}

double mae24(const std::array<double, 24>& a, const std::array<double, 24>& b) {
  double s = 0.0;
  for (int h = 0; h < 24; ++h) s += std::abs(a[h] - b[h]);
  return s / 24.0;
}

}  // namespace

TEST_CASE("LEAR recovers a planted linear law out of sample") {
  const auto panel = planted_panel(100, 0.5, 5);
  const Date day = panel.last_day();
  const auto model = fit_lear(panel, day, 70, {"load"});
  const auto f = forecast_lear(model, panel, day);
  std::array<double, 24> actual;
  for (int h = 0; h < 24; ++h) actual[h] = panel.at("price", day, h);
  CHECK(mae24(f, actual) < 1.0);
}

TEST_CASE("LEAR beats the naive forecast on the synthetic market") {
  const auto [panel, fleet] = synth_market(SynthConfig{.days = 120}, 70);
  double lear_err = 0.0, naive_err = 0.0;
  LearOptions opt;
  opt.cv_folds = 3;
  opt.grid_points = 10;
  for (int k = 0; k < 5; ++k) {
    const Date day = panel.last_day() - k;
    const auto model = fit_lear(panel, day, 56, {"load", "wind"}, opt);
    const auto f = forecast_lear(model, panel, day);
    const auto n = naive_forecast(panel, day);
    std::array<double, 24> actual;
    for (int h = 0; h < 24; ++h) actual[h] = panel.at("price", day, h);
    lear_err += mae24(f, actual);
    naive_err += mae24(n, actual);
  }
  CHECK(lear_err < naive_err);
}

TEST_CASE("fitting is deterministic under the parallel path") {
  const auto panel = planted_panel(80, 1.0, 9);
  const Date day = panel.last_day();
  LearOptions opt;
  opt.cv_folds = 3;
  opt.grid_points = 8;
  const auto m1 = fit_lear(panel, day, 50, {"load"}, opt);
  opt.parallel = false;
  const auto m2 = fit_lear(panel, day, 50, {"load"}, opt);
  for (int h = 0; h < 24; ++h) {
    REQUIRE(m1.fits[h].lambda == m2.fits[h].lambda);
    REQUIRE(m1.fits[h].intercept == m2.fits[h].intercept);
    for (Eigen::Index j = 0; j < m1.fits[h].coef.size(); ++j)
      REQUIRE(m1.fits[h].coef(j) == m2.fits[h].coef(j));
  }
}

TEST_CASE("a pinned lambda bypasses cross validation") {
  const auto panel = planted_panel(60, 1.0, 2);
  LearOptions opt;
  opt.fixed_lambda.assign(24, 3.5);
  const auto m = fit_lear(panel, panel.last_day(), 40, {"load"}, opt);
  for (double l : m.lambdas()) CHECK(l == 3.5);
}

TEST_CASE("forecasts never read the target day's prices") {
  const auto panel = planted_panel(80, 1.0, 13);
  const Date day = panel.last_day();
  const auto model = fit_lear(panel, day, 50, {"load"});
  const auto f1 = forecast_lear(model, panel, day);

  // corrupt the delivery day's prices; the forecast must not move
  auto price = panel.series("price");
  for (int h = 0; h < 24; ++h) price[panel.hour_index(day, h)] = 1e6;
  const auto corrupted = panel.with_series("price", std::move(price));
  const auto f2 = forecast_lear(model, corrupted, day);
  for (int h = 0; h < 24; ++h) REQUIRE(f1[h] == f2[h]);
}

TEST_CASE("ensemble members differ only by window and average cleanly") {
  const auto panel = planted_panel(130, 1.0, 17);
  const Date day = panel.last_day();
  LearOptions opt;
  opt.fixed_lambda.assign(24, 1.0);
  const auto models = fit_ens_lear(panel, day, default_ens_lear_windows(), {"load"}, opt);
  REQUIRE(models.size() == 4);
  CHECK(models[0].window_days == 39);
  CHECK(models[3].window_days == 104);

  std::vector<std::array<double, 24>> member;
  for (const auto& m : models) member.push_back(forecast_lear(m, panel, day));
  const auto ens = ensemble_average(member);
  for (int h = 0; h < 24; ++h) {
    double mean = 0.0;
    for (const auto& f : member) mean += f[h];
    CHECK(ens[h] == doctest::Approx(mean / 4.0));
  }
}

TEST_CASE("LARX recovers its own regressor layout") {
  const auto panel = planted_panel(90, 0.5, 23);
  const Date day = panel.last_day();
  const auto model = fit_larx(panel, day, 60, {"load"});
  const auto f = forecast_larx(model, panel, day);
  std::array<double, 24> actual;
  for (int h = 0; h < 24; ++h) actual[h] = panel.at("price", day, h);
  CHECK(mae24(f, actual) < 1.0);
}

TEST_CASE("insufficient history is rejected") {
  const auto panel = planted_panel(20, 1.0, 1);
  CHECK_THROWS_AS(fit_lear(panel, panel.first_day() + 3, 30, {}), InsufficientHistory);
  CHECK_THROWS_AS(forecast_lear(LearModel{}, panel, panel.first_day() + 3),
                  InsufficientHistory);
  CHECK_THROWS_AS(fit_larx(panel, panel.first_day(), 10, {}), InsufficientHistory);
}

TEST_CASE("missing exogenous series is reported by name") {
  const auto panel = planted_panel(60, 1.0, 3);
  LearModel m;
  m.exo = {"ghost"};
  CHECK_THROWS_WITH_AS(forecast_lear(m, panel, panel.last_day()),
                       doctest::Contains("ghost"), MissingRegressor);
}
