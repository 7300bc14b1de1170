#ifndef EPFW_EVALUATE_HPP
#define EPFW_EVALUATE_HPP

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "epfw/core.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(LengthMismatch);
EPFW_DEFINE_ERROR(TooFewDays);

/// One model's 24 hourly price predictions for one delivery day.
struct DayAheadForecast {
  std::string model;
  Date day;
  std::array<double, 24> prices{};

  void validate() const {
    for (double p : prices)
      if (!std::isfinite(p))
        throw InvalidConfig("forecast '" + model + "' for " + date_to_string(day) +
                            ": non-finite value");
  }
};

/// Accuracy scores over a test window of whole days. sMAPE is in percent;
/// rMAE normalizes by the naive forecast's MAE and is flagged undefined when
/// that MAE is zero.
struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double smape = 0.0;
  double rmae = 0.0;
  bool rmae_defined = true;
  std::int64_t n_days = 0;
};

inline MetricsReport metrics(const std::vector<double>& pred,
                             const std::vector<double>& actual,
                             const std::vector<double>& naive) {
  const std::size_t n = actual.size();
  if (pred.size() != n || naive.size() != n)
    throw LengthMismatch("metrics: series lengths differ");
  if (n == 0 || n % 24 != 0)
    throw LengthMismatch("metrics: length must be a positive multiple of 24");

  MetricsReport r;
  r.n_days = static_cast<std::int64_t>(n / 24);
  double abs_sum = 0.0, sq_sum = 0.0, smape_sum = 0.0, naive_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = actual[i] - pred[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    const double denom = std::abs(actual[i]) + std::abs(pred[i]);
    if (denom > 0.0) smape_sum += 2.0 * std::abs(e) / denom;  // 0/0 contributes 0
    naive_abs += std::abs(actual[i] - naive[i]);
  }
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  r.smape = 100.0 * smape_sum / n;
  if (naive_abs > 0.0) {
    r.rmae = abs_sum / naive_abs;
  } else {
    r.rmae_defined = false;
    r.rmae = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

/// Pointwise arithmetic mean of aligned series.
inline std::vector<double> ensemble_average(const std::vector<std::vector<double>>& members) {
  if (members.empty()) throw LengthMismatch("ensemble: no members");
  const std::size_t n = members[0].size();
  for (const auto& m : members)
    if (m.size() != n) throw LengthMismatch("ensemble: member lengths differ");
  std::vector<double> out(n, 0.0);
  for (const auto& m : members)
    for (std::size_t i = 0; i < n; ++i) out[i] += m[i];
  for (auto& v : out) v /= static_cast<double>(members.size());
  return out;
}

inline std::array<double, 24> ensemble_average(
    const std::vector<std::array<double, 24>>& members) {
  if (members.empty()) throw LengthMismatch("ensemble: no members");
  std::array<double, 24> out{};
  for (const auto& m : members)
    for (int h = 0; h < 24; ++h) out[h] += m[h];
  for (auto& v : out) v /= static_cast<double>(members.size());
  return out;
}

/// Unconditional Giacomini-White comparison on the daily L1 loss
/// differential: delta_d = sum_h |err_A| - sum_h |err_B|. The statistic is
/// N * mean(delta)^2 / omega with a Newey-West long-run variance (window
/// ceil(N^(1/3))), referred to chi-squared(1). mean_delta < 0 means A wins.
struct GwResult {
  double statistic = 0.0;
  double p_value = 1.0;   // two-sided
  double mean_delta = 0.0;
  bool degenerate = false;  // delta is (numerically) constant
};

inline double chi2_1_sf(double x) {
  return x <= 0.0 ? 1.0 : std::erfc(std::sqrt(x / 2.0));
}

inline GwResult gw_test(const std::vector<std::array<double, 24>>& errors_a,
                        const std::vector<std::array<double, 24>>& errors_b) {
  const std::size_t nd = errors_a.size();
  if (errors_b.size() != nd) throw LengthMismatch("gw: day counts differ");
  if (nd < 30) throw TooFewDays("gw: need >= 30 days, got " + std::to_string(nd));

  std::vector<double> delta(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    double la = 0.0, lb = 0.0;
    for (int h = 0; h < 24; ++h) {
      la += std::abs(errors_a[d][h]);
      lb += std::abs(errors_b[d][h]);
    }
    delta[d] = la - lb;
  }

  GwResult r;
  const double n = static_cast<double>(nd);
  double mean = 0.0;
  for (double v : delta) mean += v;
  mean /= n;
  r.mean_delta = mean;

  const int L = static_cast<int>(std::ceil(std::cbrt(n)));
  double omega = 0.0;
  for (int lag = 0; lag <= L; ++lag) {
    double gamma = 0.0;
    for (std::size_t d = static_cast<std::size_t>(lag); d < nd; ++d)
      gamma += (delta[d] - mean) * (delta[d - lag] - mean);
    gamma /= n;
    omega += lag == 0 ? gamma : 2.0 * (1.0 - static_cast<double>(lag) / (L + 1)) * gamma;
  }

  double scale = 0.0;
  for (double v : delta) scale = std::max(scale, std::abs(v));
  if (omega <= 1e-12 * (1.0 + scale * scale)) {
    r.degenerate = true;  // interpreted as "no difference"
    return r;
  }
  r.statistic = n * mean * mean / omega;
  r.p_value = chi2_1_sf(r.statistic);
  return r;
}

/// One-sided p-value that B outperforms A (small => B significantly better).
inline double gw_one_sided(const GwResult& r) {
  if (r.degenerate) return 0.5;
  return r.mean_delta > 0.0 ? r.p_value / 2.0 : 1.0 - r.p_value / 2.0;
}

/// Pairwise one-sided p-values for heat-map rendering: cell (row i, col j)
/// is the one-sided p that model j beats model i. Diagonal sentinel: -1.
inline std::vector<std::vector<double>> gw_matrix(
    const std::vector<std::vector<std::array<double, 24>>>& model_errors) {
  const std::size_t k = model_errors.size();
  if (k < 2) throw InvalidConfig("gw matrix: need >= 2 models");
  std::vector<std::vector<double>> m(k, std::vector<double>(k, -1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) m[i][j] = gw_one_sided(gw_test(model_errors[i], model_errors[j]));
  return m;
}

}  // namespace epfw

#endif  // EPFW_EVALUATE_HPP
