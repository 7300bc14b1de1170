// epfw command line: thin wrappers over the library modules plus the
// end-to-end `backtest` driver.
//
//   epfw synth        --out panel.csv [--days N] [--seed S] [--units U]
//   epfw simulate-esm --data panel.csv --fleet fleet.csv --out out.csv
//                     [--window 36] [--keep 24]
//   epfw fit          --data panel.csv --model lear|larx --day YYYY-MM-DD
//                     [--arm A] [--window N] --out coeffs.txt
//   epfw forecast     --data panel.csv --model M --day YYYY-MM-DD
//                     [--arm A] [--window N] [--seed S] [--out f.csv]
//   epfw evaluate     --data panel.csv --forecasts f.csv --out metrics.csv
//   epfw gw           --data panel.csv --forecasts f.csv --out gw.csv
//   epfw storage      --data panel.csv --forecasts f.csv --out storage.csv
//   epfw backtest     --config run.cfg [--seed S] [--out DIR] [--arm A]
//                     [--models a,b,c]
//
// Exit codes: 0 success, 2 configuration error, 1 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "epfw/backtest.hpp"
#include "epfw/dispatch.hpp"
#include "epfw/synth.hpp"

namespace {

using namespace epfw;

struct Args {
  std::map<std::string, std::string> flags;

  const std::string& require(const std::string& name) const {
    auto it = flags.find(name);
    if (it == flags.end()) throw InvalidConfig("missing required flag --" + name);
    return it->second;
  }
  std::string get(const std::string& name, std::string def = "") const {
    auto it = flags.find(name);
    return it == flags.end() ? def : it->second;
  }
  bool has(const std::string& name) const { return flags.count(name) != 0; }
  std::int64_t get_int(const std::string& name, std::int64_t def) const {
    auto it = flags.find(name);
    if (it == flags.end()) return def;
    try {
      return std::stoll(it->second);
    } catch (const std::exception&) {
      throw InvalidConfig("flag --" + name + " needs an integer, got '" +
                          it->second + "'");
    }
  }
};

Args parse_args(int argc, char** argv, int first) {
  Args a;
  for (int i = first; i < argc; ++i) {
    std::string s = argv[i];
    if (s.rfind("--", 0) != 0) throw InvalidConfig("unexpected argument '" + s + "'");
    s = s.substr(2);
    if (i + 1 >= argc) throw InvalidConfig("flag --" + s + " needs a value");
    a.flags[s] = argv[++i];
  }
  return a;
}

Date parse_date_arg(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31)
    throw InvalidConfig("bad date '" + s + "' (expected YYYY-MM-DD)");
  return make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

HourlyPanel load_panel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open data file '" + path + "'");
  return load_panel(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot open output file '" + path + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Forecast CSV plumbing shared by evaluate/gw/storage: the long format
// written by `backtest` and `forecast` (model,date,hour,forecast[,actual]).

struct ForecastSet {
  std::vector<std::string> models;  // first-seen order
  std::map<std::string, std::map<Date, std::array<double, 24>>> days;
};

ForecastSet load_forecasts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open forecasts file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("model,date,hour,forecast", 0) != 0)
    throw UnparseableValue("forecasts: expected header model,date,hour,forecast[,actual]");
  ForecastSet set;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string model, date_s, hour_s, value_s;
    if (!std::getline(ss, model, ',') || !std::getline(ss, date_s, ',') ||
        !std::getline(ss, hour_s, ',') || !std::getline(ss, value_s, ','))
      throw UnparseableValue("forecasts line " + std::to_string(lineno) +
                             ": expected model,date,hour,forecast");
    double value = 0.0;
    int hour = -1;
    try {
      hour = std::stoi(hour_s);
      value = std::stod(value_s);
    } catch (const std::exception&) {
      throw UnparseableValue("forecasts line " + std::to_string(lineno) +
                             ": bad hour or value");
    }
    if (hour < 0 || hour > 23)
      throw UnparseableValue("forecasts line " + std::to_string(lineno) +
                             ": hour out of range");
    if (!set.days.count(model)) set.models.push_back(model);
    set.days[model][parse_date_arg(date_s)][static_cast<std::size_t>(hour)] = value;
  }
  if (set.models.empty()) throw UnparseableValue("forecasts: no rows");
  return set;
}

/// Common day range covered by every model, in order.
std::vector<Date> common_days(const ForecastSet& set) {
  std::vector<Date> days;
  for (const auto& [d, f] : set.days.at(set.models.front())) days.push_back(d);
  for (const auto& m : set.models) {
    std::vector<Date> keep;
    for (Date d : days)
      if (set.days.at(m).count(d)) keep.push_back(d);
    days = std::move(keep);
  }
  if (days.empty()) throw InvalidConfig("forecasts: no day covered by every model");
  return days;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_synth(const Args& args) {
  SynthConfig cfg;
  cfg.days = static_cast<int>(args.get_int("days", cfg.days));
  cfg.n_units = static_cast<int>(args.get_int("units", cfg.n_units));
  const auto seed = static_cast<std::uint64_t>(args.get_int("seed", 1));
  const auto [panel, fleet] = synth_market(cfg, seed);
  auto out = open_out(args.require("out"));
  write_panel(panel, out);
  std::cerr << "wrote " << panel.n_days() << " days ("
            << panel.series_names().size() << " series) to " << args.require("out")
            << "\n";
  (void)fleet;
  return 0;
}

FleetSpec load_fleet_file(const std::string& path, const HourlyPanel& panel) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open fleet file '" + path + "'");
  FleetSpec fleet;
  std::string line;
  if (!std::getline(in, line) || line != "name,marginal_cost,capacity")
    throw UnparseableValue("fleet: expected header name,marginal_cost,capacity");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    DispatchUnit u;
    std::string cost_s, cap_s;
    if (!std::getline(ss, u.name, ',') || !std::getline(ss, cost_s, ',') ||
        !std::getline(ss, cap_s, ','))
      throw UnparseableValue("fleet line " + std::to_string(lineno));
    try {
      u.marginal_cost = std::stod(cost_s);
      u.capacity = std::stod(cap_s);
    } catch (const std::exception&) {
      throw UnparseableValue("fleet line " + std::to_string(lineno) + ": bad number");
    }
    fleet.units.push_back(u);
  }
  fleet.wind = panel.has_series("wind")
                   ? panel.series("wind")
                   : std::vector<double>(panel.n_hours(), 0.0);
  fleet.solar = panel.has_series("solar")
                    ? panel.series("solar")
                    : std::vector<double>(panel.n_hours(), 0.0);
  fleet.validate();
  return fleet;
}

int cmd_simulate_esm(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const auto fleet = load_fleet_file(args.require("fleet"), panel);
  const int window = static_cast<int>(args.get_int("window", 36));
  const int keep = static_cast<int>(args.get_int("keep", 24));
  const auto mcp = rolling_mcp(fleet, panel, window, keep);
  const auto out_panel = panel.with_series("mcp", mcp);
  auto out = open_out(args.require("out"));
  write_panel(out_panel, out);
  std::cerr << "dispatched " << panel.n_days() << " days; mcp column written\n";
  return 0;
}

int cmd_fit(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const std::string model = args.require("model");
  const Date day = parse_date_arg(args.require("day"));
  const auto exo = arm_regressors(parse_arm(args.get("arm", "fundamentals")));
  const auto window = args.get_int("window", 104);
  auto out = open_out(args.require("out"));
  if (model == "lear") {
    const auto m = fit_lear(panel, day, window, exo);
    for (int h = 0; h < 24; ++h) {
      out << "# hour " << h << " lambda " << m.fits[static_cast<std::size_t>(h)].lambda
          << '\n';
      write_coefficients(m.fits[static_cast<std::size_t>(h)], m.column_names, out);
    }
  } else if (model == "larx") {
    const auto m = fit_larx(panel, day, window, exo);
    const auto names = larx_column_names(exo);
    for (int h = 0; h < 24; ++h) {
      out << "# hour " << h << " lambda " << m.fits[static_cast<std::size_t>(h)].lambda
          << '\n';
      write_coefficients(m.fits[static_cast<std::size_t>(h)], names, out);
    }
  } else {
    throw InvalidConfig("fit supports models lear|larx, got '" + model + "'");
  }
  return 0;
}

int cmd_forecast(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const std::string model = args.require("model");
  const Date day = parse_date_arg(args.require("day"));

  RunConfig cfg;
  cfg.models = {model};
  cfg.arm = parse_arm(args.get("arm", "fundamentals"));
  cfg.calibration_days = args.get_int("window", 104);
  cfg.seed = static_cast<std::uint64_t>(args.get_int("seed", 1));
  cfg.validate();
  const auto exo = model == "naive" ? std::vector<std::string>{}
                                    : arm_regressors(cfg.arm);
  for (const auto& e : exo)
    if (!panel.has_series(e))
      throw InvalidConfig("arm needs series '" + e + "' which the panel lacks");
  Rng seed_rng(cfg.seed);
  auto runner = backtest_detail::make_runner(model, cfg, exo, seed_rng.next_u64());
  const auto f = runner->forecast(panel, day, 0, true);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (args.has("out")) {
    file = open_out(args.get("out"));
    out = &file;
  }
  *out << "model,date,hour,forecast\n";
  for (int h = 0; h < 24; ++h)
    *out << model << ',' << date_to_string(day) << ',' << h << ','
         << f[static_cast<std::size_t>(h)] << '\n';
  return 0;
}

/// Flattens the common days for one model into hourly vectors vs the panel.
void flatten(const ForecastSet& set, const std::vector<Date>& days,
             const HourlyPanel& panel, const std::string& model,
             std::vector<double>& pred, std::vector<double>& actual,
             std::vector<double>& naive) {
  pred.clear();
  actual.clear();
  naive.clear();
  for (Date d : days) {
    if (!panel.contains(d))
      throw InvalidConfig("forecast day " + date_to_string(d) + " not in the panel");
    const auto nf = naive_forecast(panel, d);
    const auto& f = set.days.at(model).at(d);
    for (int h = 0; h < 24; ++h) {
      pred.push_back(f[static_cast<std::size_t>(h)]);
      actual.push_back(panel.at("price", d, h));
      naive.push_back(nf[static_cast<std::size_t>(h)]);
    }
  }
}

int cmd_evaluate(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const auto set = load_forecasts(args.require("forecasts"));
  const auto days = common_days(set);
  auto out = open_out(args.require("out"));
  out << std::setprecision(12) << "model,mae,rmse,smape,rmae\n";
  for (const auto& model : set.models) {
    std::vector<double> pred, actual, naive;
    flatten(set, days, panel, model, pred, actual, naive);
    const auto r = metrics(pred, actual, naive);
    out << model << ',' << r.mae << ',' << r.rmse << ',' << r.smape << ',';
    if (r.rmae_defined)
      out << r.rmae;
    else
      out << "nan";
    out << '\n';
  }
  return 0;
}

int cmd_gw(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const auto set = load_forecasts(args.require("forecasts"));
  const auto days = common_days(set);
  std::vector<std::vector<std::array<double, 24>>> errors;
  for (const auto& model : set.models) {
    std::vector<std::array<double, 24>> e;
    for (Date d : days) {
      if (!panel.contains(d))
        throw InvalidConfig("forecast day " + date_to_string(d) + " not in the panel");
      std::array<double, 24> row{};
      const auto& f = set.days.at(model).at(d);
      for (int h = 0; h < 24; ++h)
        row[static_cast<std::size_t>(h)] =
            f[static_cast<std::size_t>(h)] - panel.at("price", d, h);
      e.push_back(row);
    }
    errors.push_back(std::move(e));
  }
  const auto m = gw_matrix(errors);
  auto out = open_out(args.require("out"));
  out << std::setprecision(12) << "model";
  for (const auto& name : set.models) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << set.models[i];
    for (double v : m[i]) out << ',' << v;
    out << '\n';
  }
  return 0;
}

int cmd_storage(const Args& args) {
  const auto panel = load_panel_file(args.require("data"));
  const auto set = load_forecasts(args.require("forecasts"));
  const auto days = common_days(set);
  std::vector<std::array<double, 24>> actuals;
  for (Date d : days) {
    if (!panel.contains(d))
      throw InvalidConfig("forecast day " + date_to_string(d) + " not in the panel");
    std::array<double, 24> a{};
    for (int h = 0; h < 24; ++h) a[static_cast<std::size_t>(h)] = panel.at("price", d, h);
    actuals.push_back(a);
  }
  std::map<std::string, std::vector<std::array<double, 24>>> forecasts;
  for (const auto& model : set.models)
    for (Date d : days) forecasts[model].push_back(set.days.at(model).at(d));
  std::vector<StorageBacktestRow> rows;
  for (const auto& spec : storage_archetypes())
    for (auto& row : backtest_storage(forecasts, actuals, spec))
      rows.push_back(std::move(row));
  auto out = open_out(args.require("out"));
  out << std::setprecision(12);
  write_storage_report(rows, out);
  return 0;
}

int cmd_backtest(const Args& args) {
  std::ifstream cfg_in(args.require("config"));
  if (!cfg_in)
    throw InvalidConfig("cannot open config file '" + args.require("config") + "'");
  RunConfig cfg = parse_run_config(cfg_in);
  if (args.has("seed"))
    cfg.seed = static_cast<std::uint64_t>(args.get_int("seed", 0));
  if (args.has("out")) cfg.out_dir = args.get("out");
  if (args.has("arm")) cfg.arm = parse_arm(args.get("arm"));
  if (args.has("models")) {
    cfg.models.clear();
    std::stringstream ss(args.get("models"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) cfg.models.push_back(tok);
  }
  cfg.validate();
  if (cfg.data_path.empty()) throw InvalidConfig("config: 'data' is required");

  const auto panel = load_panel_file(cfg.data_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
  };

  BacktestResult partial;
  BacktestResult res;
  try {
    res = run_backtest(panel, cfg, &partial);
  } catch (const Error&) {
    // flush whatever was forecast before the failure, then rethrow
    if (!partial.forecasts.empty()) {
      auto out = open_out(path("forecasts_partial.csv"));
      // trim to fully covered days per model
      BacktestResult trimmed = partial;
      write_forecasts_report(trimmed, out);
      std::cerr << "partial forecasts flushed to " << path("forecasts_partial.csv")
                << "\n";
    }
    throw;
  }

  {
    auto out = open_out(path("forecasts.csv"));
    write_forecasts_report(res, out);
  }
  {
    auto out = open_out(path("metrics.csv"));
    write_metrics_report(res, out);
  }
  if (!res.gw.empty()) {
    auto out = open_out(path("gw.csv"));
    write_gw_report(res, out);
  }
  if (!res.storage_rows.empty()) {
    auto out = open_out(path("storage.csv"));
    out << std::setprecision(12);
    write_storage_report(res.storage_rows, out);
  }
  {
    auto out = open_out(path("manifest.txt"));
    write_manifest(cfg, res, out);
  }
  std::cerr << "backtest " << date_to_string(res.test_first) << ".."
            << date_to_string(res.test_last) << ", " << cfg.models.size()
            << " model(s), reports in " << cfg.out_dir << "\n";
  return 0;
}

int usage() {
  std::cerr
      << "usage: epfw <subcommand> [--flag value ...]\n"
         "subcommands:\n"
         "  synth         generate a synthetic market panel CSV\n"
         "  simulate-esm  dispatch a fleet against a panel, append mcp column\n"
         "  fit           fit lear/larx for one day, dump coefficients\n"
         "  forecast      one-day 24-hour forecast for any model\n"
         "  evaluate      metrics for a forecasts CSV against a panel\n"
         "  gw            pairwise predictive-accuracy p-value matrix\n"
         "  storage       storage-bidding profit report for a forecasts CSV\n"
         "  backtest      end-to-end run from a config file\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  const std::string cmd = argv[1];
  try {
    const Args args = parse_args(argc, argv, 2);
    if (cmd == "synth") return cmd_synth(args);
    if (cmd == "simulate-esm") return cmd_simulate_esm(args);
    if (cmd == "fit") return cmd_fit(args);
    if (cmd == "forecast") return cmd_forecast(args);
    if (cmd == "evaluate") return cmd_evaluate(args);
    if (cmd == "gw") return cmd_gw(args);
    if (cmd == "storage") return cmd_storage(args);
    if (cmd == "backtest") return cmd_backtest(args);
    std::cerr << "unknown subcommand '" << cmd << "'\n";
    return usage();
  } catch (const epfw::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
