#ifndef EPFW_LEAR_HPP
#define EPFW_LEAR_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "epfw/features.hpp"
#include "epfw/lasso.hpp"
#include "epfw/panel.hpp"

namespace epfw {

namespace detail {

/// Deterministic parallel loop over [0, n): work items are independent and
/// write to disjoint slots.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct LearOptions {
  int cv_folds = 5;
  int grid_points = 20;
  double grid_ratio = 1e-4;
  double tol = 1e-6;
  int max_iter = 2000;
  bool parallel = true;
  /// When non-empty, skip cross validation and use these per-hour lambdas.
  std::vector<double> fixed_lambda;
};

/// 24 per-hour LASSO fits on the full autoregression layout, all trained on
/// the identical day range.
struct LearModel {
  std::array<LassoFit, 24> fits;
  std::int64_t window_days = 0;
  std::vector<std::string> exo;
  std::vector<std::string> column_names;

  std::vector<double> lambdas() const {
    std::vector<double> out(24);
    for (int h = 0; h < 24; ++h) out[h] = fits[h].lambda;
    return out;
  }
};

/// Daily recalibration fit: the calibration window of `window_days` target
/// days ends the day before `day`. Lambda is chosen per hour by k-fold CV
/// over a descending log grid unless options pin it.
inline LearModel fit_lear(const HourlyPanel& panel, Date day,
                          std::int64_t window_days,
                          const std::vector<std::string>& exo,
                          const LearOptions& opt = {}) {
  const Date last = day - 1;
  const Date first = std::max(day - window_days, panel.first_day() + 7);
  if (!panel.contains(last) || first > last)
    throw InsufficientHistory("lear: calibration window before panel start");

  LearModel model;
  model.window_days = window_days;
  model.exo = exo;
  model.column_names = lear_column_names(exo);

  auto fit_hour = [&](std::size_t h) {
    const auto fm = build_feature_matrix(panel, exo, static_cast<int>(h), first, last);
    double lambda;
    if (!opt.fixed_lambda.empty()) {
      lambda = opt.fixed_lambda[h];
    } else {
      lambda = cross_validate_lambda(fm.X, fm.y, opt.cv_folds,
                                     lambda_grid(fm.X, fm.y, opt.grid_points,
                                                 opt.grid_ratio),
                                     opt.tol * 10, opt.max_iter);
    }
    model.fits[h] = lasso_fit(fm.X, fm.y, lambda, opt.tol, opt.max_iter);
  };
  if (opt.parallel)
    detail::parallel_for(24, fit_hour);
  else
    for (std::size_t h = 0; h < 24; ++h) fit_hour(h);
  return model;
}

/// Out-of-sample application of a fitted model. Uses only information
/// available before delivery of `day` (price lags through d-1, day-d
/// exogenous forecasts), enforced by the panel view.
inline std::array<double, 24> forecast_lear(const LearModel& model,
                                            const HourlyPanel& panel, Date day) {
  for (const auto& e : model.exo)
    if (!panel.has_series(e))
      throw MissingRegressor("lear forecast: missing series '" + e + "'");
  const auto row = lear_row(PanelView(panel, day), model.exo);
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(row.data(),
                                                        static_cast<Eigen::Index>(row.size()));
  std::array<double, 24> out{};
  for (int h = 0; h < 24; ++h) out[h] = model.fits[h].predict(x);
  return out;
}

/// Ensemble of four calibration-window lengths; the ensemble forecast is the
/// arithmetic mean of the member forecasts.
inline std::vector<LearModel> fit_ens_lear(const HourlyPanel& panel, Date day,
                                           const std::array<std::int64_t, 4>& windows,
                                           const std::vector<std::string>& exo,
                                           const LearOptions& opt = {}) {
  std::vector<LearModel> models;
  for (std::int64_t w : windows) models.push_back(fit_lear(panel, day, w, exo, opt));
  return models;
}

/// Default desk-scale window set (days), scaled from the 78/104/156/208-week
/// production choice.
inline std::array<std::int64_t, 4> default_ens_lear_windows() {
  return {39, 52, 78, 104};
}

/// LARX: the same LASSO estimator on the simpler regressor layout.
struct LarxModel {
  std::array<LassoFit, 24> fits;
  std::vector<std::string> exo;
};

inline LarxModel fit_larx(const HourlyPanel& panel, Date day,
                          std::int64_t window_days,
                          const std::vector<std::string>& exo,
                          const LearOptions& opt = {}) {
  const Date last = day - 1;
  const Date first = std::max(day - window_days, panel.first_day() + 1);
  if (!panel.contains(last) || first > last)
    throw InsufficientHistory("larx: calibration window before panel start");
  const std::int64_t n = last - first + 1;

  LarxModel model;
  model.exo = exo;
  auto fit_hour = [&](std::size_t h) {
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(24 + exo.size() + 7));
    Eigen::VectorXd y(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const Date d = first + i;
      const auto row = larx_row(PanelView(panel, d), static_cast<int>(h), exo);
      for (std::size_t j = 0; j < row.size(); ++j)
        X(i, static_cast<Eigen::Index>(j)) = row[j];
      y(i) = panel.at("price", d, static_cast<int>(h));
    }
    const double lambda = !opt.fixed_lambda.empty()
                              ? opt.fixed_lambda[h]
                              : cross_validate_lambda(
                                    X, y, opt.cv_folds,
                                    lambda_grid(X, y, opt.grid_points, opt.grid_ratio),
                                    opt.tol * 10, opt.max_iter);
    model.fits[h] = lasso_fit(X, y, lambda, opt.tol, opt.max_iter);
  };
  if (opt.parallel)
    detail::parallel_for(24, fit_hour);
  else
    for (std::size_t h = 0; h < 24; ++h) fit_hour(h);
  return model;
}

inline std::array<double, 24> forecast_larx(const LarxModel& model,
                                            const HourlyPanel& panel, Date day) {
  for (const auto& e : model.exo)
    if (!panel.has_series(e))
      throw MissingRegressor("larx forecast: missing series '" + e + "'");
  std::array<double, 24> out{};
  const PanelView view(panel, day);
  for (int h = 0; h < 24; ++h) {
    const auto row = larx_row(view, h, model.exo);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
        row.data(), static_cast<Eigen::Index>(row.size()));
    out[h] = model.fits[h].predict(x);
  }
  return out;
}

}  // namespace epfw

#endif  // EPFW_LEAR_HPP
