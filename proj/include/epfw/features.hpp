#ifndef EPFW_FEATURES_HPP
#define EPFW_FEATURES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epfw/core.hpp"
#include "epfw/panel.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(TooShortPanel);
EPFW_DEFINE_ERROR(MissingRegressor);

/// Regressor matrix for one delivery hour: one row per target day.
struct FeatureMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;  // price(day, hour); NaN-free only for historical days
  std::vector<std::string> names;
  std::vector<Date> days;
};

/// Price-lag layout of the hourly autoregression: lags d-1, d-2, d-3, d-7.
inline const std::vector<int>& price_lag_days() {
  static const std::vector<int> lags = {1, 2, 3, 7};
  return lags;
}

static constexpr const char* kWeekdayNames[7] = {"mon", "tue", "wed", "thu",
                                                "fri", "sat", "sun"};

/// Column names of the full hourly-autoregression layout:
/// 24 prices for each of lags {1,2,3,7}, then per exogenous series 24 values
/// at each of days {d, d-1, d-7}, then 7 weekday dummies (Monday first).
/// Column count: 96 + 72 * |exo| + 7.
inline std::vector<std::string> lear_column_names(const std::vector<std::string>& exo) {
  std::vector<std::string> names;
  for (int lag : price_lag_days())
    for (int h = 0; h < 24; ++h)
      names.push_back("price_lag" + std::to_string(lag) + "_h" + std::to_string(h));
  for (const auto& e : exo)
    for (int lag : {0, 1, 7})
      for (int h = 0; h < 24; ++h)
        names.push_back(e + "_lag" + std::to_string(lag) + "_h" + std::to_string(h));
  for (const char* wd : kWeekdayNames) names.push_back(std::string("wd_") + wd);
  return names;
}

/// One regressor row for target day `view.forecast_day()`. Reads prices only
/// strictly before the target day and exogenous values up to the target day,
/// enforced by the view.
inline std::vector<double> lear_row(const PanelView& view,
                                    const std::vector<std::string>& exo) {
  const Date d = view.forecast_day();
  std::vector<double> row;
  row.reserve(96 + 72 * exo.size() + 7);
  for (int lag : price_lag_days())
    for (int h = 0; h < 24; ++h) row.push_back(view.at("price", d - lag, h));
  for (const auto& e : exo)
    for (int lag : {0, 1, 7})
      for (int h = 0; h < 24; ++h) row.push_back(view.at(e, d - lag, h));
  const int wd = weekday_monday0(d);
  for (int k = 0; k < 7; ++k) row.push_back(k == wd ? 1.0 : 0.0);
  return row;
}

/// Simpler autoregression layout: 24 hourly price lags of d-1, each exogenous
/// series at (d, target hour), 7 weekday dummies.
inline std::vector<std::string> larx_column_names(const std::vector<std::string>& exo) {
  std::vector<std::string> names;
  for (int h = 0; h < 24; ++h) names.push_back("price_lag1_h" + std::to_string(h));
  for (const auto& e : exo) names.push_back(e + "_d0");
  for (const char* wd : kWeekdayNames) names.push_back(std::string("wd_") + wd);
  return names;
}

inline std::vector<double> larx_row(const PanelView& view, int hour,
                                    const std::vector<std::string>& exo) {
  const Date d = view.forecast_day();
  std::vector<double> row;
  row.reserve(24 + exo.size() + 7);
  for (int h = 0; h < 24; ++h) row.push_back(view.at("price", d - 1, h));
  for (const auto& e : exo) row.push_back(view.at(e, d, hour));
  const int wd = weekday_monday0(d);
  for (int k = 0; k < 7; ++k) row.push_back(k == wd ? 1.0 : 0.0);
  return row;
}

/// Full-layout feature matrix for delivery hour `hour`, one row per target
/// day in [first_target, last_target]. Target days need a 7-day burn-in.
inline FeatureMatrix build_feature_matrix(const HourlyPanel& panel,
                                          const std::vector<std::string>& exo,
                                          int hour, Date first_target,
                                          Date last_target) {
  if (panel.n_days() < 8) throw TooShortPanel("feature matrix needs >= 8 days");
  if (hour < 0 || hour > 23) throw InvalidConfig("hour out of range");
  for (const auto& e : exo)
    if (!panel.has_series(e)) throw UnknownSeries("unknown exogenous series '" + e + "'");

  const Date earliest = panel.first_day() + 7;
  if (first_target < earliest) first_target = earliest;
  if (last_target > panel.last_day() || first_target > last_target)
    throw InsufficientHistory("feature matrix target range outside panel");

  FeatureMatrix fm;
  fm.names = lear_column_names(exo);
  const std::int64_t n = last_target - first_target + 1;
  fm.X.resize(n, static_cast<Eigen::Index>(fm.names.size()));
  fm.y.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const Date d = first_target + i;
    const auto row = lear_row(PanelView(panel, d), exo);
    for (std::size_t j = 0; j < row.size(); ++j)
      fm.X(i, static_cast<Eigen::Index>(j)) = row[j];
    fm.y(i) = panel.at("price", d, hour);
    fm.days.push_back(d);
  }
  return fm;
}

/// Convenience: rows for the last `window_days` days ending at `last_target`.
inline FeatureMatrix build_feature_matrix(const HourlyPanel& panel,
                                          const std::vector<std::string>& exo,
                                          int hour, std::int64_t window_days) {
  const Date last = panel.last_day();
  return build_feature_matrix(panel, exo, hour, last - (window_days - 1), last);
}

}  // namespace epfw

#endif  // EPFW_FEATURES_HPP
