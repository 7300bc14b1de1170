#ifndef EPFW_DISPATCH_HPP
#define EPFW_DISPATCH_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "epfw/core.hpp"
#include "epfw/lp.hpp"
#include "epfw/panel.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(InconsistentWindow);

struct DispatchUnit {
  std::string name;
  double marginal_cost = 0.0;  // EUR/MWh
  double capacity = 0.0;       // MW
};

struct PumpedStorage {
  double power = 0.0;              // MW, charge and discharge limit
  double energy_power_factor = 9;  // hours of generation at full power
  double cycle_efficiency = 0.75;
};

/// Supply side of the single-zone dispatch problem. Renewable profiles are
/// hourly and must cover whatever window is cleared.
struct FleetSpec {
  std::vector<DispatchUnit> units;
  std::vector<double> wind;   // MWh/h
  std::vector<double> solar;  // MWh/h
  double curtailment_cost = 20.0;     // EUR/MWh
  double load_shedding_cost = 3000.0; // EUR/MWh
  bool has_storage = false;
  PumpedStorage storage;

  void validate() const {
    double max_cost = 0.0;
    for (const auto& u : units) {
      if (!std::isfinite(u.marginal_cost) || u.capacity < 0.0)
        throw InvalidConfig("fleet: bad unit '" + u.name + "'");
      max_cost = std::max(max_cost, u.marginal_cost);
    }
    if (!(load_shedding_cost > max_cost))
      throw InvalidConfig("fleet: load-shedding cost must exceed every unit cost");
    if (!(curtailment_cost > -max_cost))
      throw InvalidConfig("fleet: curtailment cost too negative");
    if (has_storage &&
        (storage.power < 0.0 || storage.energy_power_factor <= 0.0 ||
         storage.cycle_efficiency <= 0.0 || storage.cycle_efficiency > 1.0))
      throw InvalidConfig("fleet: bad storage parameters");
  }

  double total_capacity() const {
    return std::accumulate(units.begin(), units.end(), 0.0,
                           [](double s, const DispatchUnit& u) { return s + u.capacity; });
  }
};

struct MarketClearingResult {
  std::vector<double> mcp;                        // EUR/MWh per hour
  std::vector<std::vector<double>> generation;    // [hour][unit] MW
  std::vector<double> curtailed;                  // MW per hour
  std::vector<double> shed;                       // MW per hour
  std::vector<double> storage_charge, storage_discharge, storage_level;
  double objective = 0.0;
  double end_level = 0.0;  // carry-over for rolling windows
};

/// Competitive price of a storage-free fleet at a given net load (demand minus
/// renewables). Walks the merit-order stack; negative net load prices at the
/// curtailment margin, excess load at the shedding cost. At exactly zero net
/// load the marginal unit is the first (cheapest) one at zero output.
inline double merit_order_price(const FleetSpec& fleet, double net_load) {
  if (net_load < 0.0) return -fleet.curtailment_cost;
  std::vector<std::size_t> order(fleet.units.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fleet.units[a].marginal_cost < fleet.units[b].marginal_cost;
  });
  double cum = 0.0;
  for (std::size_t k : order) {
    cum += fleet.units[k].capacity;
    if (net_load <= cum) return fleet.units[k].marginal_cost;
  }
  return fleet.load_shedding_cost;
}

/// Clear one window of hours as a min-cost LP and report the demand-balance
/// duals as the hourly market clearing price.
inline MarketClearingResult clear_window(const FleetSpec& fleet,
                                         const std::vector<double>& demand,
                                         std::size_t first_hour, std::size_t n_hours,
                                         double start_level = 0.0) {
  fleet.validate();
  if (n_hours < 24) throw InconsistentWindow("window must span at least 24 hours");
  if (first_hour + n_hours > demand.size() ||
      first_hour + n_hours > fleet.wind.size() ||
      first_hour + n_hours > fleet.solar.size())
    throw InconsistentWindow("window exceeds demand/renewable series");

  const std::size_t U = fleet.units.size();
  const std::size_t H = n_hours;
  const bool st = fleet.has_storage;
  // per-hour variable block: gen[0..U-1], curt, shed, (ch, dis, lvl)
  const std::size_t per_hour = U + 2 + (st ? 3 : 0);
  const auto var = [&](std::size_t h, std::size_t k) { return h * per_hour + k; };
  const std::size_t nv = H * per_hour;

  LpProblem p;
  p.sense = Sense::Min;
  p.c.assign(nv, 0.0);
  p.lb.assign(nv, 0.0);
  p.ub.assign(nv, kInf);

  std::vector<double> ren(H);
  for (std::size_t h = 0; h < H; ++h)
    ren[h] = fleet.wind[first_hour + h] + fleet.solar[first_hour + h];

  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t u = 0; u < U; ++u) {
      p.c[var(h, u)] = fleet.units[u].marginal_cost;
      p.ub[var(h, u)] = fleet.units[u].capacity;
    }
    p.c[var(h, U)] = fleet.curtailment_cost;
    p.ub[var(h, U)] = ren[h];
    p.c[var(h, U + 1)] = fleet.load_shedding_cost;
    p.ub[var(h, U + 1)] = std::max(demand[first_hour + h], 0.0);
    if (st) {
      p.ub[var(h, U + 2)] = fleet.storage.power;  // charge
      p.ub[var(h, U + 3)] = fleet.storage.power;  // discharge
      p.ub[var(h, U + 4)] = fleet.storage.power * fleet.storage.energy_power_factor;
    }
  }

  // demand balance per hour, then storage level linking
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t u = 0; u < U; ++u) row[var(h, u)] = 1.0;
    row[var(h, U)] = -1.0;      // curtailment
    row[var(h, U + 1)] = 1.0;   // shedding
    if (st) {
      row[var(h, U + 2)] = -1.0;  // charge consumes
      row[var(h, U + 3)] = 1.0;   // discharge supplies
    }
    p.A.push_back(std::move(row));
    p.row_sense.push_back(RowSense::EQ);
    p.b.push_back(demand[first_hour + h] - ren[h]);
  }
  if (st) {
    const double eta = fleet.storage.cycle_efficiency;
    for (std::size_t h = 0; h < H; ++h) {
      std::vector<double> row(nv, 0.0);
      row[var(h, U + 4)] = 1.0;
      row[var(h, U + 2)] = -eta;
      row[var(h, U + 3)] = 1.0;
      double rhs = 0.0;
      if (h == 0) rhs = start_level;
      else row[var(h - 1, U + 4)] = -1.0;
      p.A.push_back(std::move(row));
      p.row_sense.push_back(RowSense::EQ);
      p.b.push_back(rhs);
    }
  }

  const LpSolution s = solve_lp(p);
  if (s.status == LpStatus::Infeasible) throw Infeasible("dispatch window infeasible");
  if (s.status == LpStatus::Unbounded) throw Unbounded("dispatch window unbounded");

  MarketClearingResult r;
  r.objective = s.objective;
  r.mcp.resize(H);
  r.generation.assign(H, std::vector<double>(U, 0.0));
  r.curtailed.resize(H);
  r.shed.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    r.mcp[h] = s.duals[h];
    for (std::size_t u = 0; u < U; ++u) r.generation[h][u] = s.x[var(h, u)];
    r.curtailed[h] = s.x[var(h, U)];
    r.shed[h] = s.x[var(h, U + 1)];
  }
  if (st) {
    r.storage_charge.resize(H);
    r.storage_discharge.resize(H);
    r.storage_level.resize(H);
    for (std::size_t h = 0; h < H; ++h) {
      r.storage_charge[h] = s.x[var(h, U + 2)];
      r.storage_discharge[h] = s.x[var(h, U + 3)];
      r.storage_level[h] = s.x[var(h, U + 4)];
    }
    r.end_level = r.storage_level[H - 1];
  }
  return r;
}

/// Rolling-window market clearing: solve `window_hours`, keep the first
/// `keep_hours` of prices, carry the storage level over, advance, repeat.
inline std::vector<double> rolling_mcp(const FleetSpec& fleet,
                                       const std::vector<double>& demand,
                                       std::size_t window_hours = 36,
                                       std::size_t keep_hours = 24) {
  if (window_hours < keep_hours || keep_hours < 24)
    throw InconsistentWindow("need window_hours >= keep_hours >= 24");
  const std::size_t H = demand.size();
  std::vector<double> mcp;
  mcp.reserve(H);
  double level = 0.0;
  for (std::size_t start = 0; start < H; start += keep_hours) {
    const std::size_t w = std::min(window_hours, H - start);
    const std::size_t keep = std::min(keep_hours, H - start);
    const auto res = clear_window(fleet, demand, start,
                                  std::max<std::size_t>(w, 24), level);
    for (std::size_t h = 0; h < keep; ++h) mcp.push_back(res.mcp[h]);
    if (fleet.has_storage) level = res.storage_level[keep - 1];
  }
  return mcp;
}

inline std::vector<double> rolling_mcp(const FleetSpec& fleet, const HourlyPanel& panel,
                                       std::size_t window_hours = 36,
                                       std::size_t keep_hours = 24) {
  return rolling_mcp(fleet, panel.series("load"), window_hours, keep_hours);
}

}  // namespace epfw

#endif  // EPFW_DISPATCH_HPP
