// End-to-end day-ahead backtest driver: walks the test window day by day,
// recalibrating each configured forecaster under one of the three regressor
// arms (market fundamentals only, clearing price only, or both), then scores
// the accumulated forecasts statistically and through the storage bidder.
#ifndef EPFW_BACKTEST_HPP
#define EPFW_BACKTEST_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "epfw/core.hpp"
#include "epfw/evaluate.hpp"
#include "epfw/features.hpp"
#include "epfw/forest.hpp"
#include "epfw/lear.hpp"
#include "epfw/lstm.hpp"
#include "epfw/nn.hpp"
#include "epfw/panel.hpp"
#include "epfw/rng.hpp"
#include "epfw/storage.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(LeakageDetected);

// ---------------------------------------------------------------------------
// Regressor arms.

enum class Arm { Fundamentals, McpOnly, FundamentalsPlusMcp };

inline Arm parse_arm(const std::string& s) {
  if (s == "fundamentals") return Arm::Fundamentals;
  if (s == "mcp-only") return Arm::McpOnly;
  if (s == "fundamentals+mcp") return Arm::FundamentalsPlusMcp;
  throw InvalidConfig("unknown arm '" + s +
                      "' (expected fundamentals | mcp-only | fundamentals+mcp)");
}

inline std::string arm_name(Arm a) {
  switch (a) {
    case Arm::Fundamentals: return "fundamentals";
    case Arm::McpOnly: return "mcp-only";
    case Arm::FundamentalsPlusMcp: return "fundamentals+mcp";
  }
  return "?";
}

/// Exogenous series each arm feeds to the forecasters.
inline std::vector<std::string> arm_regressors(Arm a) {
  const std::vector<std::string> fundamentals = {"load", "wind",  "solar",
                                                 "gas",  "coal", "co2"};
  switch (a) {
    case Arm::Fundamentals: return fundamentals;
    case Arm::McpOnly: return {"mcp"};
    case Arm::FundamentalsPlusMcp: {
      auto out = fundamentals;
      out.push_back("mcp");
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Random-forest day-ahead forecaster: one forest per delivery hour on the
// autoregressive layout (previous-day price lags, same-day exogenous value,
// weekday one-hot).

struct RfModel {
  std::vector<Forest> forests;  // one per hour
  std::vector<std::string> exo;
};

inline RfModel fit_rf(const HourlyPanel& panel, Date day,
                      std::int64_t window_days,
                      const std::vector<std::string>& exo,
                      const ForestParams& params, std::uint64_t seed) {
  const Date last = day - 1;
  const Date first = std::max(day - window_days, panel.first_day() + 7);
  if (!panel.contains(last) || first > last)
    throw InsufficientHistory("rf: calibration window before panel start");
  for (const auto& e : exo)
    if (!panel.has_series(e)) throw MissingRegressor("rf: missing series '" + e + "'");

  const std::int64_t n = last - first + 1;
  RfModel model;
  model.exo = exo;
  Rng base(seed);
  for (int h = 0; h < 24; ++h) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const Date d = first + i;
      const auto row = larx_row(PanelView(panel, d), h, exo);
      if (i == 0) X.resize(n, static_cast<Eigen::Index>(row.size()));
      for (std::size_t j = 0; j < row.size(); ++j)
        X(i, static_cast<Eigen::Index>(j)) = row[j];
      y(i) = panel.at("price", d, h);
    }
    model.forests.push_back(
        fit_forest(X, y, params, base.fork(static_cast<std::uint64_t>(h)).next_u64()));
  }
  return model;
}

inline std::array<double, 24> forecast_rf(const RfModel& model,
                                          const HourlyPanel& panel, Date day) {
  std::array<double, 24> out{};
  for (int h = 0; h < 24; ++h) {
    const auto row = larx_row(PanelView(panel, day), h, model.exo);
    out[h] = model.forests[static_cast<std::size_t>(h)].predict(
        Eigen::Map<const Eigen::VectorXd>(row.data(),
                                          static_cast<Eigen::Index>(row.size())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration.

inline const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = {
      "naive", "larx", "lear", "ens-lear", "dnn", "ens-dnn", "lstm", "rf"};
  return names;
}

struct RunConfig {
  std::string data_path;
  std::string out_dir = "out";
  std::vector<std::string> models = {"naive", "larx"};
  Arm arm = Arm::Fundamentals;
  std::int64_t test_days = 28;        // last days of the panel
  std::int64_t val_days = 28;         // neural validation slice before each fit day
  std::int64_t calibration_days = 104;  // LEAR/LARX/RF window
  int cv_every_days = 7;     // full lambda cross-validation cadence
  int refit_every_days = 7;  // neural/forest weight-refit cadence
  int dnn_search_budget = 4;
  int dnn_epochs = 60;
  int lstm_epochs = 40;
  int lstm_hidden = 24;
  int rf_trees = 50;
  std::uint64_t seed = 1;
  bool with_storage = true;
  bool leakage_audit = false;

  void validate() const {
    if (test_days < 1 || val_days < 1 || calibration_days < 8)
      throw InvalidConfig("config: test_days/val_days >= 1, calibration_days >= 8");
    if (cv_every_days < 1 || refit_every_days < 1)
      throw InvalidConfig("config: recalibration cadences must be >= 1 day");
    if (dnn_search_budget < 1 || dnn_epochs < 1 || lstm_epochs < 1 ||
        lstm_hidden < 1 || rf_trees < 1)
      throw InvalidConfig("config: model settings must be >= 1");
    if (models.empty()) throw InvalidConfig("config: no models selected");
    for (const auto& m : models) {
      const auto& known = known_models();
      if (std::find(known.begin(), known.end(), m) == known.end())
        throw InvalidConfig("config: unknown model '" + m + "'");
    }
  }
};

/// Parses "key = value" lines; '#' starts a comment, blank lines ignored.
inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto as_int = [&](std::int64_t lo) {
      std::int64_t v = 0;
      try {
        v = std::stoll(value);
      } catch (const std::exception&) {
        throw InvalidConfig("config: '" + key + "' needs an integer, got '" + value + "'");
      }
      if (v < lo)
        throw InvalidConfig("config: '" + key + "' must be >= " + std::to_string(lo));
      return v;
    };
    auto as_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw InvalidConfig("config: '" + key + "' needs true/false");
    };
    if (key == "data") {
      cfg.data_path = value;
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "models") {
      cfg.models.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) cfg.models.push_back(tok);
      }
    } else if (key == "arm") {
      cfg.arm = parse_arm(value);
    } else if (key == "test_days") {
      cfg.test_days = as_int(1);
    } else if (key == "val_days") {
      cfg.val_days = as_int(1);
    } else if (key == "calibration_days") {
      cfg.calibration_days = as_int(8);
    } else if (key == "cv_every_days") {
      cfg.cv_every_days = static_cast<int>(as_int(1));
    } else if (key == "refit_every_days") {
      cfg.refit_every_days = static_cast<int>(as_int(1));
    } else if (key == "dnn_search_budget") {
      cfg.dnn_search_budget = static_cast<int>(as_int(1));
    } else if (key == "dnn_epochs") {
      cfg.dnn_epochs = static_cast<int>(as_int(1));
    } else if (key == "lstm_epochs") {
      cfg.lstm_epochs = static_cast<int>(as_int(1));
    } else if (key == "lstm_hidden") {
      cfg.lstm_hidden = static_cast<int>(as_int(1));
    } else if (key == "rf_trees") {
      cfg.rf_trees = static_cast<int>(as_int(1));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(as_int(0));
    } else if (key == "storage") {
      cfg.with_storage = as_bool();
    } else if (key == "leakage_audit") {
      cfg.leakage_audit = as_bool();
    } else {
      throw InvalidConfig("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "data = " << cfg.data_path << '\n';
  os << "out = " << cfg.out_dir << '\n';
  os << "models = ";
  for (std::size_t i = 0; i < cfg.models.size(); ++i)
    os << (i ? "," : "") << cfg.models[i];
  os << '\n';
  os << "arm = " << arm_name(cfg.arm) << '\n';
  os << "test_days = " << cfg.test_days << '\n';
  os << "val_days = " << cfg.val_days << '\n';
  os << "calibration_days = " << cfg.calibration_days << '\n';
  os << "cv_every_days = " << cfg.cv_every_days << '\n';
  os << "refit_every_days = " << cfg.refit_every_days << '\n';
  os << "dnn_search_budget = " << cfg.dnn_search_budget << '\n';
  os << "dnn_epochs = " << cfg.dnn_epochs << '\n';
  os << "lstm_epochs = " << cfg.lstm_epochs << '\n';
  os << "lstm_hidden = " << cfg.lstm_hidden << '\n';
  os << "rf_trees = " << cfg.rf_trees << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "storage = " << (cfg.with_storage ? "true" : "false") << '\n';
  os << "leakage_audit = " << (cfg.leakage_audit ? "true" : "false") << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Per-model runners. Each runner produces a 24-hour forecast for a given day
// and owns its recalibration state (cached lambdas, fitted networks). When
// `update_state` is false the runner must not mutate its caches, so the same
// forecast can be replayed on an information-barrier-audited panel.

namespace backtest_detail {

struct ModelRunner {
  virtual ~ModelRunner() = default;
  virtual std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                          std::int64_t day_index,
                                          bool update_state) = 0;
};

struct NaiveRunner final : ModelRunner {
  std::array<double, 24> forecast(const HourlyPanel& panel, Date day, std::int64_t,
                                  bool) override {
    return naive_forecast(panel, day);
  }
};

/// Shared recalibration logic for LEAR/LARX: daily refit, full lambda CV only
/// every `cv_every_days` days, cached per-hour lambdas in between.
struct LassoArRunner final : ModelRunner {
  bool use_full_layout;  // true: LEAR, false: LARX
  std::int64_t window;
  std::vector<std::string> exo;
  int cv_every;
  std::vector<double> cached_lambda;

  LassoArRunner(bool full, std::int64_t w, std::vector<std::string> e, int cv)
      : use_full_layout(full), window(w), exo(std::move(e)), cv_every(cv) {}

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    LearOptions opt;
    if (!cached_lambda.empty() && day_index % cv_every != 0)
      opt.fixed_lambda = cached_lambda;
    if (use_full_layout) {
      const auto model = fit_lear(panel, day, window, exo, opt);
      if (update_state) cached_lambda = model.lambdas();
      return forecast_lear(model, panel, day);
    }
    const auto model = fit_larx(panel, day, window, exo, opt);
    if (update_state) {
      cached_lambda.resize(24);
      for (int h = 0; h < 24; ++h) cached_lambda[static_cast<std::size_t>(h)] =
          model.fits[static_cast<std::size_t>(h)].lambda;
    }
    return forecast_larx(model, panel, day);
  }
};

struct EnsLearRunner final : ModelRunner {
  std::array<std::int64_t, 4> windows = default_ens_lear_windows();
  std::vector<std::string> exo;
  int cv_every;
  std::array<std::vector<double>, 4> cached_lambda;

  EnsLearRunner(std::vector<std::string> e, int cv) : exo(std::move(e)), cv_every(cv) {}

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    std::vector<std::array<double, 24>> members;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      LearOptions opt;
      if (!cached_lambda[w].empty() && day_index % cv_every != 0)
        opt.fixed_lambda = cached_lambda[w];
      const auto model = fit_lear(panel, day, windows[w], exo, opt);
      if (update_state) cached_lambda[w] = model.lambdas();
      members.push_back(forecast_lear(model, panel, day));
    }
    return ensemble_average(members);
  }
};

inline SplitSpec fit_split(const HourlyPanel& panel, Date day, std::int64_t val_days) {
  SplitSpec s;
  s.train_first = panel.first_day();
  s.val_last = day - 1;
  s.val_first = s.val_last - (val_days - 1);
  s.train_last = s.val_first - 1;
  s.test_first = s.test_last = day;
  s.validate();
  if (s.train_last - s.train_first + 1 < 8)
    throw InsufficientHistory("backtest: not enough training days before " +
                              date_to_string(day));
  return s;
}

struct DnnRunner final : ModelRunner {
  std::vector<std::string> exo;
  std::int64_t val_days;
  int refit_every, budget, epochs;
  std::uint64_t seed;
  std::optional<DnnModel> model;
  std::optional<NetworkSpec> best_spec;  // hyperparameters searched once
  DnnFeatureMask best_mask = DnnFeatureMask::all();

  DnnRunner(std::vector<std::string> e, std::int64_t vd, int refit, int b, int ep,
            std::uint64_t s)
      : exo(std::move(e)), val_days(vd), refit_every(refit), budget(b), epochs(ep),
        seed(s) {}

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    if (update_state && (!model || day_index % refit_every == 0)) {
      const auto split = fit_split(panel, day, val_days);
      TrainOptions opt;
      opt.max_epochs = epochs;
      if (!best_spec) {
        const auto best = random_search(
            SearchSpace{}, budget, seed,
            [&](const NetworkSpec& cand, const DnnFeatureMask& mask) {
              TrainOptions quick = opt;
              quick.max_epochs = std::max(1, epochs / 4);
              const auto m = fit_dnn(panel, split, exo, cand, mask, quick);
              double err = 0.0;
              for (Date d = split.val_first; d <= split.val_last; d = d + 1) {
                const auto f = forecast_dnn(m, panel, d);
                for (int h = 0; h < 24; ++h)
                  err += std::abs(f[static_cast<std::size_t>(h)] -
                                  panel.at("price", d, h));
              }
              return err;
            });
        best_spec = best.spec;
        best_mask = best.mask;
      }
      model = fit_dnn(panel, split, exo, *best_spec, best_mask, opt);
    }
    if (!model) throw InsufficientHistory("dnn: no fitted model for audit replay");
    return forecast_dnn(*model, panel, day);
  }
};

struct EnsDnnRunner final : ModelRunner {
  std::vector<std::string> exo;
  std::int64_t val_days;
  int refit_every, budget, epochs;
  std::array<std::uint64_t, 4> seeds;
  std::vector<DnnModel> members;

  EnsDnnRunner(std::vector<std::string> e, std::int64_t vd, int refit, int b, int ep,
               std::uint64_t seed)
      : exo(std::move(e)), val_days(vd), refit_every(refit), budget(b), epochs(ep) {
    Rng rng(seed);
    for (auto& s : seeds) s = rng.next_u64();
  }

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    if (update_state && (members.empty() || day_index % refit_every == 0)) {
      const auto split = fit_split(panel, day, val_days);
      TrainOptions opt;
      opt.max_epochs = epochs;
      members = fit_ens_dnn(panel, split, exo, SearchSpace{}, budget, seeds, opt);
    }
    if (members.empty())
      throw InsufficientHistory("ens-dnn: no fitted members for audit replay");
    std::vector<std::array<double, 24>> fs;
    for (const auto& m : members) fs.push_back(forecast_dnn(m, panel, day));
    return ensemble_average(fs);
  }
};

struct LstmRunner final : ModelRunner {
  std::vector<std::string> exo;
  std::int64_t val_days;
  int refit_every, epochs, hidden;
  std::uint64_t seed;
  std::optional<LstmModel> model;

  LstmRunner(std::vector<std::string> e, std::int64_t vd, int refit, int ep, int hid,
             std::uint64_t s)
      : exo(std::move(e)), val_days(vd), refit_every(refit), epochs(ep), hidden(hid),
        seed(s) {}

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    if (update_state && (!model || day_index % refit_every == 0)) {
      LstmSpec spec;
      spec.hidden_size = hidden;
      spec.init_seed = seed;
      model = fit_lstm(panel, fit_split(panel, day, val_days), exo, spec, epochs);
    }
    if (!model) throw InsufficientHistory("lstm: no fitted model for audit replay");
    return forecast_lstm(*model, panel, day);
  }
};

struct RfRunner final : ModelRunner {
  std::vector<std::string> exo;
  std::int64_t window;
  int refit_every;
  ForestParams params;
  std::uint64_t seed;
  std::optional<RfModel> model;

  RfRunner(std::vector<std::string> e, std::int64_t w, int refit, int n_trees,
           std::uint64_t s)
      : exo(std::move(e)), window(w), refit_every(refit), seed(s) {
    params.n_trees = n_trees;
  }

  std::array<double, 24> forecast(const HourlyPanel& panel, Date day,
                                  std::int64_t day_index, bool update_state) override {
    if (update_state && (!model || day_index % refit_every == 0))
      model = fit_rf(panel, day, window, exo, params, seed);
    if (!model) throw InsufficientHistory("rf: no fitted model for audit replay");
    return forecast_rf(*model, panel, day);
  }
};

inline std::unique_ptr<ModelRunner> make_runner(const std::string& name,
                                                const RunConfig& cfg,
                                                const std::vector<std::string>& exo,
                                                std::uint64_t seed) {
  if (name == "naive") return std::make_unique<NaiveRunner>();
  if (name == "larx")
    return std::make_unique<LassoArRunner>(false, cfg.calibration_days, exo,
                                           cfg.cv_every_days);
  if (name == "lear")
    return std::make_unique<LassoArRunner>(true, cfg.calibration_days, exo,
                                           cfg.cv_every_days);
  if (name == "ens-lear")
    return std::make_unique<EnsLearRunner>(exo, cfg.cv_every_days);
  if (name == "dnn")
    return std::make_unique<DnnRunner>(exo, cfg.val_days, cfg.refit_every_days,
                                       cfg.dnn_search_budget, cfg.dnn_epochs, seed);
  if (name == "ens-dnn")
    return std::make_unique<EnsDnnRunner>(exo, cfg.val_days, cfg.refit_every_days,
                                          cfg.dnn_search_budget, cfg.dnn_epochs, seed);
  if (name == "lstm")
    return std::make_unique<LstmRunner>(exo, cfg.val_days, cfg.refit_every_days,
                                        cfg.lstm_epochs, cfg.lstm_hidden, seed);
  if (name == "rf")
    return std::make_unique<RfRunner>(exo, cfg.calibration_days, cfg.refit_every_days,
                                      cfg.rf_trees, seed);
  throw InvalidConfig("unknown model '" + name + "'");
}

/// Audit copy of the panel: prices from `day` onward and exogenous values
/// after `day` are overwritten with a sentinel. A forecaster respecting the
/// information barrier must produce an identical forecast on it.
inline HourlyPanel corrupt_future(const HourlyPanel& panel, Date day) {
  constexpr double kSentinel = 1e7;
  HourlyPanel out = panel;
  for (const auto& name : panel.series_names()) {
    const Date cutoff = name == "price" ? day : day + 1;
    if (cutoff > panel.last_day()) continue;
    auto values = panel.series(name);
    for (std::size_t i = panel.hour_index(cutoff, 0); i < values.size(); ++i)
      values[i] = kSentinel;
    out = out.with_series(name, std::move(values));
  }
  return out;
}

}  // namespace backtest_detail

// ---------------------------------------------------------------------------
// Result bundle and driver.

struct BacktestResult {
  std::vector<std::string> models;
  Arm arm = Arm::Fundamentals;
  Date test_first{}, test_last{};
  std::vector<std::array<double, 24>> actuals;
  std::map<std::string, std::vector<std::array<double, 24>>> forecasts;
  std::map<std::string, MetricsReport> report;
  std::vector<std::vector<double>> gw;  // empty when < 2 models or < 30 days
  std::vector<StorageBacktestRow> storage_rows;
};

/// Walks the last `test_days` of the panel. Each day every model forecasts
/// using only information visible through PanelView(day); LEAR/LARX refit
/// daily (lambda CV on the configured cadence), neural and forest models
/// refit on the weight cadence. `partial`, when given, accumulates forecasts
/// so a failing day can still be flushed by the caller.
inline BacktestResult run_backtest(const HourlyPanel& panel, const RunConfig& cfg,
                                   BacktestResult* partial = nullptr) {
  cfg.validate();
  const auto exo = arm_regressors(cfg.arm);
  for (const auto& e : exo)
    if (!panel.has_series(e))
      throw InvalidConfig("arm '" + arm_name(cfg.arm) + "' needs series '" + e +
                          "' which the panel lacks");

  BacktestResult res;
  res.models = cfg.models;
  res.arm = cfg.arm;
  res.test_last = panel.last_day();
  res.test_first = res.test_last - (cfg.test_days - 1);
  if (res.test_first - panel.first_day() < 15)
    throw InsufficientHistory("backtest: panel too short for the test window");
  if (partial) *partial = res;

  Rng seed_rng(cfg.seed);
  std::vector<std::unique_ptr<backtest_detail::ModelRunner>> runners;
  for (const auto& name : cfg.models)
    runners.push_back(backtest_detail::make_runner(name, cfg, exo, seed_rng.next_u64()));

  for (Date d = res.test_first; d <= res.test_last; d = d + 1) {
    std::array<double, 24> actual{};
    for (int h = 0; h < 24; ++h) actual[static_cast<std::size_t>(h)] =
        panel.at("price", d, h);
    res.actuals.push_back(actual);
    if (partial) partial->actuals.push_back(actual);

    const std::int64_t day_index = d - res.test_first;
    for (std::size_t m = 0; m < runners.size(); ++m) {
      const std::string& name = cfg.models[m];
      std::array<double, 24> f{};
      try {
        f = runners[m]->forecast(panel, d, day_index, true);
        if (cfg.leakage_audit) {
          const auto audited = backtest_detail::corrupt_future(panel, d);
          const auto g = runners[m]->forecast(audited, d, day_index, false);
          for (int h = 0; h < 24; ++h)
            if (f[static_cast<std::size_t>(h)] != g[static_cast<std::size_t>(h)])
              throw LeakageDetected("forecast changed when post-deadline data was "
                                    "overwritten");
        }
      } catch (const Error& e) {
        throw Error("model '" + name + "', day " + date_to_string(d) + ": " +
                    e.what());
      }
      res.forecasts[name].push_back(f);
      if (partial) partial->forecasts[name].push_back(f);
    }
  }

  // Statistical scores against the weekly-persistence baseline.
  std::vector<double> actual_flat, naive_flat;
  for (Date d = res.test_first; d <= res.test_last; d = d + 1) {
    const auto nf = naive_forecast(panel, d);
    for (int h = 0; h < 24; ++h) {
      actual_flat.push_back(panel.at("price", d, h));
      naive_flat.push_back(nf[static_cast<std::size_t>(h)]);
    }
  }
  for (const auto& name : cfg.models) {
    std::vector<double> pred_flat;
    for (const auto& day : res.forecasts[name])
      pred_flat.insert(pred_flat.end(), day.begin(), day.end());
    res.report[name] = metrics(pred_flat, actual_flat, naive_flat);
  }

  if (cfg.models.size() >= 2 && cfg.test_days >= 30) {
    std::vector<std::vector<std::array<double, 24>>> errors;
    for (const auto& name : cfg.models) {
      std::vector<std::array<double, 24>> e;
      for (std::size_t di = 0; di < res.actuals.size(); ++di) {
        std::array<double, 24> row{};
        for (int h = 0; h < 24; ++h)
          row[static_cast<std::size_t>(h)] =
              res.forecasts[name][di][static_cast<std::size_t>(h)] -
              res.actuals[di][static_cast<std::size_t>(h)];
        e.push_back(row);
      }
      errors.push_back(std::move(e));
    }
    res.gw = gw_matrix(errors);
  }

  if (cfg.with_storage) {
    std::map<std::string, std::vector<std::array<double, 24>>> by_model(
        res.forecasts.begin(), res.forecasts.end());
    for (const auto& spec : storage_archetypes())
      for (auto& row : backtest_storage(by_model, res.actuals, spec))
        res.storage_rows.push_back(std::move(row));
  }

  if (partial) *partial = res;
  return res;
}

// ---------------------------------------------------------------------------
// Report writers. Fixed formatting keeps reruns byte-identical.

namespace backtest_detail {

inline std::ostream& prep(std::ostream& out) {
  out << std::setprecision(12);
  return out;
}

}  // namespace backtest_detail

/// Long format, one row per model/day/hour.
inline void write_forecasts_report(const BacktestResult& res, std::ostream& out) {
  backtest_detail::prep(out) << "model,date,hour,forecast,actual\n";
  for (const auto& name : res.models) {
    const auto& days = res.forecasts.at(name);
    for (std::size_t di = 0; di < days.size(); ++di) {
      const std::string date = date_to_string(res.test_first + static_cast<std::int64_t>(di));
      for (int h = 0; h < 24; ++h)
        out << name << ',' << date << ',' << h << ','
            << days[di][static_cast<std::size_t>(h)] << ','
            << res.actuals[di][static_cast<std::size_t>(h)] << '\n';
    }
  }
}

inline void write_metrics_report(const BacktestResult& res, std::ostream& out) {
  backtest_detail::prep(out) << "model,mae,rmse,smape,rmae\n";
  for (const auto& name : res.models) {
    const auto& r = res.report.at(name);
    out << name << ',' << r.mae << ',' << r.rmse << ',' << r.smape << ',';
    if (r.rmae_defined)
      out << r.rmae;
    else
      out << "nan";
    out << '\n';
  }
}

/// Cell (row i, col j): one-sided p-value that model j beats model i.
inline void write_gw_report(const BacktestResult& res, std::ostream& out) {
  backtest_detail::prep(out) << "model";
  for (const auto& name : res.models) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < res.gw.size(); ++i) {
    out << res.models[i];
    for (double v : res.gw[i]) out << ',' << v;
    out << '\n';
  }
}

/// FNV-1a, enough to fingerprint a config in the manifest.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline void write_manifest(const RunConfig& cfg, const BacktestResult& res,
                           std::ostream& out) {
  // the output directory has no bearing on the results, so it is excluded
  // from the fingerprint: the same run into two directories yields the same
  // manifest
  RunConfig hashed = cfg;
  hashed.out_dir = ".";
  const std::string serialized = serialize_run_config(hashed);
  out << "version: 0.1.0\n";
  out << "config_hash: " << std::hex << fnv1a(serialized) << std::dec << '\n';
  out << "seed: " << cfg.seed << '\n';
  out << "arm: " << arm_name(res.arm) << '\n';
  out << "test_first: " << date_to_string(res.test_first) << '\n';
  out << "test_last: " << date_to_string(res.test_last) << '\n';
  out << "config:\n";
  std::istringstream lines(serialized);
  std::string line;
  while (std::getline(lines, line)) out << "  " << line << '\n';
}

}  // namespace epfw

#endif  // EPFW_BACKTEST_HPP
