#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "epfw/evaluate.hpp"
#include "epfw/rng.hpp"

using namespace epfw;

namespace {

// Tile a short pattern to a whole number of days (metrics are means, so
// tiling leaves them unchanged).
std::vector<double> tile24(const std::vector<double>& pat) {
  std::vector<double> out;
  while (out.size() % 24 != 0 || out.empty())
    out.insert(out.end(), pat.begin(), pat.end());
  return out;
}

std::vector<std::array<double, 24>> iid_errors(Rng& rng, int days, double sd) {
  std::vector<std::array<double, 24>> e(days);
  for (auto& day : e)
    for (auto& v : day) v = sd * rng.normal();
  return e;
}

}  // namespace

TEST_CASE("perfect forecast scores zero everywhere") {
  std::vector<double> a(48, 31.0), naive(48, 20.0);
  const auto r = metrics(a, a, naive);
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.smape == 0.0);
  CHECK(r.rmae == 0.0);
  CHECK(r.n_days == 2);
}

TEST_CASE("hand-derived four-point example") {
  const auto actual = tile24({1, 2, 3, 4});
  const auto pred = tile24({2, 2, 2, 4});
  const auto naive = tile24({0, 0, 0, 0});
  const auto r = metrics(pred, actual, naive);
  CHECK(std::abs(r.mae - 0.5) < 1e-12);
  CHECK(std::abs(r.rmse - std::sqrt(0.5)) < 1e-12);
  CHECK(std::abs(r.smape - 100.0 * (2.0 / 3.0 + 0.4) / 4.0) < 1e-12);
  CHECK(std::abs(r.smape - 26.6666666666667) < 1e-10);
  CHECK(std::abs(r.rmae - 0.2) < 1e-12);
}

TEST_CASE("naive against itself has rMAE exactly 1") {
  Rng rng(6);
  std::vector<double> actual(72), naive(72);
  for (int i = 0; i < 72; ++i) {
    actual[i] = rng.uniform(10.0, 60.0);
    naive[i] = rng.uniform(10.0, 60.0);
  }
  const auto r = metrics(naive, actual, naive);
  CHECK(r.rmae == 1.0);
}

TEST_CASE("sMAPE stays within [0, 200] and zero naive MAE is flagged") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(24), p(24), n(24);
    for (int i = 0; i < 24; ++i) {
      a[i] = rng.uniform(-50.0, 50.0);
      p[i] = rng.uniform(-50.0, 50.0);
      n[i] = rng.uniform(-50.0, 50.0);
    }
    const auto r = metrics(p, a, n);
    CHECK(r.smape >= 0.0);
    CHECK(r.smape <= 200.0);
    CHECK(r.mae >= 0.0);
    CHECK(r.rmse >= r.mae - 1e-12);  // RMSE dominates MAE
  }
  std::vector<double> a(24, 5.0), p(24, 4.0);
  const auto r = metrics(p, a, a);  // naive == actual
  CHECK_FALSE(r.rmae_defined);
  CHECK(std::isnan(r.rmae));
}

TEST_CASE("metrics rejects bad lengths") {
  std::vector<double> a(24, 1.0), b(23, 1.0);
  CHECK_THROWS_AS(metrics(b, a, a), LengthMismatch);
  CHECK_THROWS_AS(metrics(b, b, b), LengthMismatch);
  std::vector<double> empty;
  CHECK_THROWS_AS(metrics(empty, empty, empty), LengthMismatch);
}

TEST_CASE("ensemble average is the pointwise mean") {
  const std::vector<std::vector<double>> members = {{1, 2}, {3, 6}};
  const auto avg = ensemble_average(members);
  CHECK(avg[0] == doctest::Approx(2.0));
  CHECK(avg[1] == doctest::Approx(4.0));
  CHECK_THROWS_AS(ensemble_average(std::vector<std::vector<double>>{}), LengthMismatch);
  const std::vector<std::vector<double>> ragged = {{1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(ensemble_average(ragged), LengthMismatch);
}

TEST_CASE("GW null rejection rate is calibrated near 5%") {
  Rng rng(404);
  const int trials = 1000;
  int rejections = 0;
  for (int t = 0; t < trials; ++t) {
    const auto ea = iid_errors(rng, 100, 1.0);
    const auto eb = iid_errors(rng, 100, 1.0);
    const auto r = gw_test(ea, eb);
    if (!r.degenerate && r.p_value < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / trials;
  CHECK(rate > 0.025);
  CHECK(rate < 0.075);
}

TEST_CASE("GW detects a scale-separated alternative") {
  Rng rng(77);
  std::vector<std::array<double, 24>> ea(200), eb(200);
  for (int d = 0; d < 200; ++d)
    for (int h = 0; h < 24; ++h) {
      const double e = std::abs(rng.normal()) + 0.1;
      eb[d][h] = e;
      ea[d][h] = 0.5 * e;
    }
  const auto r = gw_test(ea, eb);
  CHECK(r.p_value < 0.01);
  CHECK(r.mean_delta < 0.0);                 // A carries less loss
  CHECK(gw_one_sided(r) > 0.5);              // so "B beats A" is implausible
  const auto flipped = gw_test(eb, ea);
  CHECK(gw_one_sided(flipped) < 0.005);      // and "A beats B" is strongly supported
  CHECK(flipped.statistic == doctest::Approx(r.statistic));
}

TEST_CASE("GW is symmetric up to the sign of the differential") {
  Rng rng(31);
  const auto ea = iid_errors(rng, 60, 2.0);
  const auto eb = iid_errors(rng, 60, 2.5);
  const auto ab = gw_test(ea, eb);
  const auto ba = gw_test(eb, ea);
  CHECK(ab.mean_delta == doctest::Approx(-ba.mean_delta));
  CHECK(ab.statistic == doctest::Approx(ba.statistic));
  CHECK(ab.p_value == doctest::Approx(ba.p_value));
  CHECK(gw_one_sided(ab) + gw_one_sided(ba) == doctest::Approx(1.0));
}

TEST_CASE("identical losses are degenerate, not a rejection") {
  Rng rng(9);
  const auto ea = iid_errors(rng, 40, 1.0);
  const auto r = gw_test(ea, ea);
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
  CHECK(gw_one_sided(r) == 0.5);
}

TEST_CASE("GW input validation") {
  Rng rng(1);
  const auto ea = iid_errors(rng, 29, 1.0);
  CHECK_THROWS_AS(gw_test(ea, ea), TooFewDays);
  const auto eb = iid_errors(rng, 30, 1.0);
  CHECK_THROWS_AS(gw_test(eb, ea), LengthMismatch);
}

TEST_CASE("GW matrix shape, diagonal sentinel, and pairing") {
  Rng rng(52);
  std::vector<std::vector<std::array<double, 24>>> models;
  models.push_back(iid_errors(rng, 60, 1.0));
  models.push_back(iid_errors(rng, 60, 2.0));
  models.push_back(iid_errors(rng, 60, 3.0));
  const auto m = gw_matrix(models);
  REQUIRE(m.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(m[i].size() == 3);
    CHECK(m[i][i] == -1.0);
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) {
        CHECK(m[i][j] >= 0.0);
        CHECK(m[i][j] <= 1.0);
        CHECK(m[i][j] + m[j][i] == doctest::Approx(1.0));
      }
  }
  // the low-error model should be clearly ahead of the high-error one
  CHECK(m[2][0] < 0.05);   // "model 0 beats model 2": strong evidence
  CHECK(m[0][2] > 0.95);
  CHECK_THROWS_AS(gw_matrix({models[0]}), InvalidConfig);
}

TEST_CASE("forecast records reject non-finite values") {
  DayAheadForecast f;
  f.model = "m";
  f.day = make_date(2020, 1, 1);
  f.prices.fill(10.0);
  CHECK_NOTHROW(f.validate());
  f.prices[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(f.validate(), InvalidConfig);
}
