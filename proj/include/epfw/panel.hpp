#ifndef EPFW_PANEL_HPP
#define EPFW_PANEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "epfw/core.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(MissingColumn);
EPFW_DEFINE_ERROR(NonContiguousHours);
EPFW_DEFINE_ERROR(UnparseableValue);
EPFW_DEFINE_ERROR(UnknownSeries);
EPFW_DEFINE_ERROR(InsufficientHistory);

/// Aligned hourly panel: every day has exactly 24 rows, all series share the
/// same length, no NaN after ingestion. Immutable once built.
class HourlyPanel {
 public:
  HourlyPanel() = default;

  HourlyPanel(Date first_day, std::map<std::string, std::vector<double>> series)
      : first_day_(first_day), series_(std::move(series)) {
    if (series_.empty()) throw InvalidConfig("panel: no series");
    n_hours_ = series_.begin()->second.size();
    if (n_hours_ == 0 || n_hours_ % 24 != 0)
      throw InvalidConfig("panel: hour count must be a positive multiple of 24");
    for (const auto& [name, col] : series_) {
      if (col.size() != n_hours_)
        throw InvalidConfig("panel: series '" + name + "' length mismatch");
      for (double v : col)
        if (!std::isfinite(v))
          throw UnparseableValue("panel: non-finite value in series '" + name + "'");
    }
  }

  std::size_t n_hours() const { return n_hours_; }
  std::size_t n_days() const { return n_hours_ / 24; }
  Date first_day() const { return first_day_; }
  Date last_day() const { return first_day_ + static_cast<std::int64_t>(n_days()) - 1; }

  bool has_series(const std::string& name) const { return series_.count(name) != 0; }

  const std::vector<double>& series(const std::string& name) const {
    auto it = series_.find(name);
    if (it == series_.end()) throw UnknownSeries("unknown series '" + name + "'");
    return it->second;
  }

  double at(const std::string& name, Date day, int hour) const {
    return series(name)[hour_index(day, hour)];
  }

  std::size_t hour_index(Date day, int hour) const {
    const std::int64_t d = day - first_day_;
    if (d < 0 || d >= static_cast<std::int64_t>(n_days()) || hour < 0 || hour > 23)
      throw InsufficientHistory("panel: " + date_to_string(day) + " h" +
                                std::to_string(hour) + " outside panel range");
    return static_cast<std::size_t>(d) * 24 + static_cast<std::size_t>(hour);
  }

  bool contains(Date day) const {
    return day >= first_day_ && day <= last_day();
  }

  std::vector<std::string> series_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : series_) out.push_back(name);
    return out;
  }

  /// Panel with one extra (or replaced) column; values must cover all hours.
  HourlyPanel with_series(const std::string& name, std::vector<double> values) const {
    auto s = series_;
    s[name] = std::move(values);
    return HourlyPanel(first_day_, std::move(s));
  }

  /// Panel restricted to [first, last] inclusive.
  HourlyPanel slice(Date first, Date last) const {
    if (!contains(first) || !contains(last) || last < first)
      throw InsufficientHistory("panel slice outside range");
    const std::size_t i0 = hour_index(first, 0);
    const std::size_t i1 = hour_index(last, 23) + 1;
    std::map<std::string, std::vector<double>> s;
    for (const auto& [name, col] : series_)
      s[name] = std::vector<double>(col.begin() + i0, col.begin() + i1);
    return HourlyPanel(first, std::move(s));
  }

 private:
  Date first_day_{};
  std::size_t n_hours_ = 0;
  std::map<std::string, std::vector<double>> series_;
};

/// Information barrier for forecaster code. Prices are visible strictly
/// before `forecast_day`; exogenous series are visible through
/// `forecast_day` itself (day-ahead forecasts known at bid time).
class PanelView {
 public:
  PanelView(const HourlyPanel& panel, Date forecast_day)
      : panel_(&panel), forecast_day_(forecast_day) {}

  double at(const std::string& name, Date day, int hour) const {
    Date limit = (name == "price") ? forecast_day_ - 1 : forecast_day_;
    if (day > limit)
      throw InsufficientHistory("leakage: '" + name + "' requested for " +
                                date_to_string(day) + " when forecasting " +
                                date_to_string(forecast_day_));
    return panel_->at(name, day, hour);
  }

  const HourlyPanel& panel() const { return *panel_; }
  Date forecast_day() const { return forecast_day_; }
  Date first_day() const { return panel_->first_day(); }

 private:
  const HourlyPanel* panel_;
  Date forecast_day_;
};

/// Train / validation / test day ranges (inclusive), disjoint and ordered.
struct SplitSpec {
  Date train_first, train_last;
  Date val_first, val_last;
  Date test_first, test_last;

  void validate() const {
    if (!(train_first <= train_last && val_first <= val_last && test_first <= test_last))
      throw InvalidConfig("split: empty range");
    if (!(train_last < val_first && val_last < test_first))
      throw InvalidConfig("split: ranges must be ordered train < validation < test");
  }

  /// Chronological split of [first, last]: `val_days` before the test range,
  /// `test_days` at the end, the rest is training.
  static SplitSpec tail(Date first, Date last, std::int64_t val_days, std::int64_t test_days) {
    SplitSpec s;
    s.test_last = last;
    s.test_first = last - (test_days - 1);
    s.val_last = s.test_first - 1;
    s.val_first = s.val_last - (val_days - 1);
    s.train_first = first;
    s.train_last = s.val_first - 1;
    s.validate();
    return s;
  }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && !s.empty() && std::isfinite(out);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

/// Parse `YYYY-MM-DDTHH` into (date, hour).
inline bool parse_timestamp(const std::string& ts, Date& day, int& hour) {
  int y, mo, d, h;
  if (std::sscanf(ts.c_str(), "%d-%d-%dT%d", &y, &mo, &d, &h) != 4) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23) return false;
  day = make_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  hour = h;
  return true;
}

/// Load an hourly panel from CSV. Expected header:
/// `timestamp,price,load,wind,solar,gas,coal,co2[,mcp]` (the non-timestamp
/// names may be remapped through `schema`: file column -> panel series).
/// Rows are sorted by timestamp; duplicates and hour gaps are rejected.
inline HourlyPanel load_panel(std::istream& in,
                              const std::map<std::string, std::string>& schema = {}) {
  std::string line;
  if (!std::getline(in, line)) throw UnparseableValue("csv: empty input");
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "timestamp")
    throw MissingColumn("csv: first column must be 'timestamp'");

  std::vector<std::string> colnames;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto it = schema.find(header[c]);
    colnames.push_back(it == schema.end() ? header[c] : it->second);
  }
  if (colnames.empty()) throw MissingColumn("csv: no data columns");

  struct Row {
    Date day;
    int hour;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != colnames.size() + 1)
      throw UnparseableValue("csv row " + std::to_string(lineno) + ": expected " +
                             std::to_string(colnames.size() + 1) + " fields");
    Row r;
    if (!parse_timestamp(fields[0], r.day, r.hour))
      throw UnparseableValue("csv row " + std::to_string(lineno) +
                             ": bad timestamp '" + fields[0] + "'");
    r.values.resize(colnames.size());
    for (std::size_t c = 0; c < colnames.size(); ++c) {
      if (!detail::parse_double(fields[c + 1], r.values[c]))
        throw UnparseableValue("csv row " + std::to_string(lineno) + ", column '" +
                               colnames[c] + "': bad value '" + fields[c + 1] + "'");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw UnparseableValue("csv: no data rows");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.day != b.day ? a.day < b.day : a.hour < b.hour;
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].day == rows[i - 1].day && rows[i].hour == rows[i - 1].hour)
      throw UnparseableValue("csv: duplicate timestamp " + date_to_string(rows[i].day) +
                             " h" + std::to_string(rows[i].hour));
  }
  if (rows.size() % 24 != 0)
    throw NonContiguousHours("csv: row count " + std::to_string(rows.size()) +
                             " is not a multiple of 24");
  const Date first = rows[0].day;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Date want_day = first + static_cast<std::int64_t>(i / 24);
    const int want_hour = static_cast<int>(i % 24);
    if (rows[i].day != want_day || rows[i].hour != want_hour)
      throw NonContiguousHours("csv: expected " + date_to_string(want_day) + " h" +
                               std::to_string(want_hour) + ", found " +
                               date_to_string(rows[i].day) + " h" +
                               std::to_string(rows[i].hour));
  }

  std::map<std::string, std::vector<double>> series;
  for (std::size_t c = 0; c < colnames.size(); ++c) {
    auto& col = series[colnames[c]];
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r.values[c]);
  }
  return HourlyPanel(first, std::move(series));
}

/// Inverse of load_panel; round-trips values bit-exactly (hex float format).
inline void write_panel(const HourlyPanel& panel, std::ostream& out) {
  auto names = panel.series_names();
  out << "timestamp";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < panel.n_hours(); ++i) {
    const Date day = panel.first_day() + static_cast<std::int64_t>(i / 24);
    std::snprintf(buf, sizeof(buf), "T%02d", static_cast<int>(i % 24));
    out << date_to_string(day) << buf;
    for (const auto& n : names) {
      std::snprintf(buf, sizeof(buf), "%.17g", panel.series(n)[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

/// Naive day-ahead forecast: same hour one week earlier, all weekdays alike.
inline std::array<double, 24> naive_forecast(const HourlyPanel& panel, Date day) {
  const Date src = day - 7;
  if (!panel.contains(src))
    throw InsufficientHistory("naive forecast for " + date_to_string(day) +
                              " needs " + date_to_string(src));
  std::array<double, 24> out{};
  for (int h = 0; h < 24; ++h) out[h] = panel.at("price", src, h);
  return out;
}

}  // namespace epfw

#endif  // EPFW_PANEL_HPP
