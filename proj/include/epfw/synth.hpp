#ifndef EPFW_SYNTH_HPP
#define EPFW_SYNTH_HPP

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "epfw/core.hpp"
#include "epfw/dispatch.hpp"
#include "epfw/panel.hpp"
#include "epfw/rng.hpp"

namespace epfw {

/// Parameters of the synthetic single-zone market used for desk-scale
/// experiments. The generated price is the dispatch MCP of the generated
/// fleet plus a seasonal component plus noise, so the MCP column is an
/// informative regressor by construction.
struct SynthConfig {
  int days = 90;
  int n_units = 6;
  double noise_sd = 2.0;       // EUR/MWh, iid on top of MCP + seasonal
  double daily_amp = 5.0;      // price seasonal amplitude
  double weekly_amp = 3.0;     // weekend price offset amplitude
  double base_load = 100.0;    // MW
  double load_daily_amp = 30.0;
  double load_weekly_amp = 12.0;
  double load_noise_sd = 4.0;
  double renewable_share = 0.35;  // of base load, wind + solar scale
  Date first_day = make_date(2015, 1, 1);

  void validate() const {
    if (days < 1 || n_units < 1 || noise_sd < 0.0 || base_load <= 0.0 ||
        load_daily_amp < 0.0 || renewable_share < 0.0)
      throw InvalidConfig("synth: bad configuration");
  }
};

/// Deterministic synthetic market: a merit-order fleet, hourly fundamentals,
/// the implied hourly MCP, and a price built on top of it.
inline std::pair<HourlyPanel, FleetSpec> synth_market(const SynthConfig& cfg,
                                                      std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);

  FleetSpec fleet;
  const int U = cfg.n_units;
  // ascending-cost stack covering ~1.6x base load in total
  const double total_cap = 1.6 * (cfg.base_load + cfg.load_daily_amp);
  for (int u = 0; u < U; ++u) {
    DispatchUnit unit;
    unit.name = "u" + std::to_string(u);
    const double frac = U == 1 ? 0.5 : static_cast<double>(u) / (U - 1);
    unit.marginal_cost = 8.0 + 62.0 * frac + rng.uniform(-2.0, 2.0);
    unit.capacity = total_cap / U * rng.uniform(0.8, 1.2);
    fleet.units.push_back(unit);
  }

  const std::size_t H = static_cast<std::size_t>(cfg.days) * 24;
  std::vector<double> load(H), wind(H), solar(H), gas(H), coal(H), co2(H);
  double wind_state = cfg.renewable_share * cfg.base_load * 0.5;
  double gas_p = 20.0, coal_p = 10.0, co2_p = 25.0;
  double sky_factor = 1.0;  // per-day solar scaling, drawn at midnight
  for (std::size_t t = 0; t < H; ++t) {
    const std::size_t d = t / 24;
    const int h = static_cast<int>(t % 24);
    const int wd = weekday_monday0(cfg.first_day + static_cast<std::int64_t>(d));
    const double daily = std::sin(2.0 * M_PI * (h - 6) / 24.0);
    const double weekend = wd >= 5 ? 1.0 : 0.0;

    load[t] = cfg.base_load + cfg.load_daily_amp * daily -
              cfg.load_weekly_amp * weekend + cfg.load_noise_sd * rng.normal();
    load[t] = std::max(load[t], 0.1 * cfg.base_load);

    // wind: clipped AR(1); solar: daytime bell with random sky factor
    wind_state = 0.9 * wind_state +
                 0.1 * cfg.renewable_share * cfg.base_load * 0.5 +
                 0.08 * cfg.renewable_share * cfg.base_load * rng.normal();
    wind_state = std::max(wind_state, 0.0);
    wind[t] = wind_state;
    const double sun = std::max(0.0, std::sin(M_PI * (h - 6) / 12.0));
    if (h == 0) sky_factor = rng.uniform(0.3, 1.0);
    solar[t] = cfg.renewable_share * cfg.base_load * 0.6 * sun * sky_factor;

    if (h == 0) {
      gas_p = std::max(5.0, gas_p + 0.3 * rng.normal());
      coal_p = std::max(3.0, coal_p + 0.2 * rng.normal());
      co2_p = std::max(1.0, co2_p + 0.25 * rng.normal());
    }
    gas[t] = gas_p;
    coal[t] = coal_p;
    co2[t] = co2_p;
  }
  fleet.wind = wind;
  fleet.solar = solar;

  std::vector<double> mcp(H), price(H);
  for (std::size_t t = 0; t < H; ++t) {
    mcp[t] = merit_order_price(fleet, load[t] - wind[t] - solar[t]);
    const std::size_t d = t / 24;
    const int h = static_cast<int>(t % 24);
    const int wd = weekday_monday0(cfg.first_day + static_cast<std::int64_t>(d));
    const double seasonal =
        cfg.daily_amp * std::sin(2.0 * M_PI * (h - 8) / 24.0) +
        cfg.weekly_amp * (wd >= 5 ? -1.0 : 1.0);
    price[t] = mcp[t] + seasonal + cfg.noise_sd * rng.normal();
  }

  std::map<std::string, std::vector<double>> series;
  series["price"] = std::move(price);
  series["load"] = std::move(load);
  series["wind"] = std::move(wind);
  series["solar"] = std::move(solar);
  series["gas"] = std::move(gas);
  series["coal"] = std::move(coal);
  series["co2"] = std::move(co2);
  series["mcp"] = std::move(mcp);
  return {HourlyPanel(cfg.first_day, std::move(series)), std::move(fleet)};
}

}  // namespace epfw

#endif  // EPFW_SYNTH_HPP
