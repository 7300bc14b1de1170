#ifndef EPFW_CORE_HPP
#define EPFW_CORE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace epfw {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define EPFW_DEFINE_ERROR(name)                \
  struct name : ::epfw::Error {                \
    using ::epfw::Error::Error;                \
  }

EPFW_DEFINE_ERROR(InvalidConfig);
EPFW_DEFINE_ERROR(DimensionMismatch);

/// Calendar date stored as a serial day number (days since 1970-01-01).
/// All days are exactly 24 hours; DST handling is out of scope.
struct Date {
  std::int64_t serial = 0;

  friend auto operator<=>(const Date&, const Date&) = default;
  Date operator+(std::int64_t d) const { return Date{serial + d}; }
  Date operator-(std::int64_t d) const { return Date{serial - d}; }
  std::int64_t operator-(const Date& o) const { return serial - o.serial; }
};

// Civil-date conversion, valid for all Gregorian dates of interest.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{days_from_civil(y, m, d)};
}

/// Weekday index with Monday = 0 ... Sunday = 6.
inline int weekday_monday0(Date d) {
  // 1970-01-01 was a Thursday (Monday-first index 3).
  std::int64_t w = (d.serial + 3) % 7;
  return static_cast<int>(w < 0 ? w + 7 : w);
}

inline std::string date_to_string(Date d) {
  int y;
  unsigned m, dd;
  civil_from_days(d.serial, y, m, dd);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, dd);
  return buf;
}

}  // namespace epfw

#endif  // EPFW_CORE_HPP
