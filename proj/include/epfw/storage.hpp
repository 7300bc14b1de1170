#ifndef EPFW_STORAGE_HPP
#define EPFW_STORAGE_HPP

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "epfw/core.hpp"
#include "epfw/lp.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(MisalignedDays);
EPFW_DEFINE_ERROR(InfeasiblePlan);

struct StorageSpec {
  std::string name = "storage";
  double cap = 1.0;  // generation (and charging) capacity, MW
  double ecr = 7.0;  // energy-to-capacity ratio, hours
  double eta = 0.75; // cycle efficiency

  void validate() const {
    if (cap <= 0.0 || ecr <= 0.0 || eta <= 0.0 || eta > 1.0)
      throw InvalidConfig("storage: need cap > 0, ecr > 0, eta in (0,1]");
  }

  /// Maximum storage level. Capacity is defined at the charging side: a full
  /// store holds the energy of ecr hours of full-power charging after
  /// losses, so the day-plan optimum matches the reference two-level
  /// example (charge cap at the low price, generate eta*cap at the high one).
  double max_level() const { return eta * cap * ecr; }
};

/// Paper archetypes: high/medium/low energy-to-capacity ratio.
inline std::array<StorageSpec, 3> storage_archetypes() {
  return {StorageSpec{"storage1", 1.0, 7.0, 0.75},
          StorageSpec{"storage2", 1.0, 3.0, 0.80},
          StorageSpec{"storage3", 1.0, 1.0, 0.90}};
}

struct StoragePlan {
  std::array<double, 24> charge{};      // C_h, MW
  std::array<double, 24> generation{};  // G_h, MW
  std::array<double, 24> level{};       // SL_h, MWh
  double objective = 0.0;               // planned profit, EUR
};

/// Independent feasibility audit of the daily constraints: capacity split,
/// level recursion, generation bounded by the prior level, level cap, empty
/// start balance and empty end.
inline void check_plan(const StoragePlan& plan, const StorageSpec& spec,
                       double tol = 1e-7) {
  const double max_level = spec.max_level();
  double prev = 0.0;
  for (int h = 0; h < 24; ++h) {
    const double g = plan.generation[h], c = plan.charge[h], sl = plan.level[h];
    if (g < -tol || c < -tol || sl < -tol)
      throw InfeasiblePlan("negative quantity at hour " + std::to_string(h + 1));
    if (g + c > spec.cap + tol)
      throw InfeasiblePlan("capacity exceeded at hour " + std::to_string(h + 1));
    if (sl > prev + c * spec.eta - g + tol)
      throw InfeasiblePlan("level balance violated at hour " + std::to_string(h + 1));
    if (h > 0 && g > prev + tol)
      throw InfeasiblePlan("generation above stored level at hour " +
                           std::to_string(h + 1));
    if (sl > max_level + tol)
      throw InfeasiblePlan("level cap exceeded at hour " + std::to_string(h + 1));
    prev = sl;
  }
  if (plan.generation[0] > tol) throw InfeasiblePlan("generation in hour 1");
  if (std::abs(plan.level[0] - plan.charge[0] * spec.eta) > tol)
    throw InfeasiblePlan("hour-1 level must equal eta * charge");
  if (plan.level[23] > tol) throw InfeasiblePlan("storage not empty at hour 24");
}

/// Optimal daily dispatch against forecast prices: maximize
/// sum p*G - sum p*C subject to the daily storage constraints. Simultaneous
/// charging and generating in the same hour (possible only at degenerate
/// prices, where it is cost-neutral) is removed afterwards.
inline StoragePlan plan_day(const std::array<double, 24>& forecast,
                            const StorageSpec& spec) {
  spec.validate();
  for (double p : forecast)
    if (!std::isfinite(p)) throw InvalidConfig("plan_day: non-finite price");

  // variables: per hour G, C, SL
  const auto vG = [](int h) { return 3 * h; };
  const auto vC = [](int h) { return 3 * h + 1; };
  const auto vS = [](int h) { return 3 * h + 2; };

  LpProblem p;
  p.sense = Sense::Max;
  p.c.assign(72, 0.0);
  p.lb.assign(72, 0.0);
  p.ub.assign(72, 0.0);
  for (int h = 0; h < 24; ++h) {
    p.c[vG(h)] = forecast[h];
    p.c[vC(h)] = -forecast[h];
    p.ub[vG(h)] = h == 0 ? 0.0 : spec.cap;  // no generation from an empty start
    p.ub[vC(h)] = spec.cap;
    p.ub[vS(h)] = h == 23 ? 0.0 : spec.max_level();  // empty at end of day
  }

  auto row = [&](std::initializer_list<std::pair<int, double>> terms, RowSense sense,
                 double rhs) {
    std::vector<double> r(72, 0.0);
    for (const auto& [j, v] : terms) r[static_cast<std::size_t>(j)] = v;
    p.A.push_back(std::move(r));
    p.row_sense.push_back(sense);
    p.b.push_back(rhs);
  };

  // hour-1 balance is an equality (empty start); later hours may waste
  // energy, which profit maximization never exercises at positive prices
  row({{vS(0), 1.0}, {vC(0), -spec.eta}}, RowSense::EQ, 0.0);
  for (int h = 1; h < 24; ++h) {
    row({{vS(h), 1.0}, {vS(h - 1), -1.0}, {vC(h), -spec.eta}, {vG(h), 1.0}},
        RowSense::LE, 0.0);
    row({{vG(h), 1.0}, {vS(h - 1), -1.0}}, RowSense::LE, 0.0);
  }
  for (int h = 0; h < 24; ++h)
    row({{vG(h), 1.0}, {vC(h), 1.0}}, RowSense::LE, spec.cap);

  const LpSolution s = solve_lp(p);
  if (s.status != LpStatus::Optimal)
    throw InfeasiblePlan("daily storage LP did not solve");  // cannot happen: 0 is feasible

  StoragePlan plan;
  plan.objective = s.objective;
  for (int h = 0; h < 24; ++h) {
    plan.generation[h] = std::max(0.0, s.x[static_cast<std::size_t>(vG(h))]);
    plan.charge[h] = std::max(0.0, s.x[static_cast<std::size_t>(vC(h))]);
    plan.level[h] = std::max(0.0, s.x[static_cast<std::size_t>(vS(h))]);
  }
  // strip cost-neutral simultaneous charge+generate (h=1 has no generation)
  for (int h = 1; h < 24; ++h) {
    const double m = std::min(plan.generation[h], plan.charge[h]);
    if (m > 0.0) {
      plan.generation[h] -= m;
      plan.charge[h] -= m;
    }
  }
  check_plan(plan, spec);
  return plan;
}

/// Eq-15 style realized profit: the planned quantities settled at actual
/// prices.
inline double realized_profit(const StoragePlan& plan,
                              const std::array<double, 24>& actual) {
  double pi = 0.0;
  for (int h = 0; h < 24; ++h)
    pi += actual[h] * (plan.generation[h] - plan.charge[h]);
  return pi;
}

struct StorageBacktestRow {
  std::string model;
  std::string archetype;
  double profit_per_mw = 0.0;   // sum of realized daily profits / cap
  double perfect_per_mw = 0.0;  // same, planning on actual prices
  double factor = 0.0;          // profit / perfect profit
  bool factor_defined = true;
};

/// Per-model storage backtest against one archetype. Days are independent
/// (the plan is recomputed from scratch each day).
inline std::vector<StorageBacktestRow> backtest_storage(
    const std::map<std::string, std::vector<std::array<double, 24>>>& forecasts,
    const std::vector<std::array<double, 24>>& actuals, const StorageSpec& spec) {
  spec.validate();
  for (const auto& [model, days] : forecasts)
    if (days.size() != actuals.size())
      throw MisalignedDays("storage backtest: model '" + model + "' has " +
                           std::to_string(days.size()) + " days, actuals " +
                           std::to_string(actuals.size()));

  // realized (not LP-objective) accounting, so a forecast equal to the
  // actuals reproduces this number bit for bit and scores factor 1 exactly
  double perfect = 0.0;
  for (const auto& day : actuals)
    perfect += realized_profit(plan_day(day, spec), day);
  perfect /= spec.cap;

  std::vector<StorageBacktestRow> rows;
  for (const auto& [model, days] : forecasts) {
    StorageBacktestRow r;
    r.model = model;
    r.archetype = spec.name;
    r.perfect_per_mw = perfect;
    for (std::size_t d = 0; d < days.size(); ++d)
      r.profit_per_mw += realized_profit(plan_day(days[d], spec), actuals[d]);
    r.profit_per_mw /= spec.cap;
    if (perfect > 0.0) {
      r.factor = r.profit_per_mw / perfect;
    } else {
      r.factor_defined = false;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Table-4-shaped CSV: model, storage archetype, annual profit per MW, factor.
inline void write_storage_report(const std::vector<StorageBacktestRow>& rows,
                                 std::ostream& out) {
  out << "model,archetype,profit_per_mw,factor\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.archetype << ',' << r.profit_per_mw << ',';
    if (r.factor_defined)
      out << r.factor;
    else
      out << "nan";
    out << '\n';
  }
}

}  // namespace epfw

#endif  // EPFW_STORAGE_HPP
