#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace fe {

// Calendar date at day precision.
using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);

// Strict ISO 8601 calendar date (YYYY-MM-DD). Returns nullopt for anything
// else, including impossible dates such as 2021-02-29.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

Date last_day_of_month(Date d);
bool is_month_end(Date d);

enum class LagUnit { days, months, years };

// A backward time offset. `count` is never negative.
struct Lag {
  int count = 0;
  LagUnit unit = LagUnit::months;

  static constexpr Lag days(int n) { return {n, LagUnit::days}; }
  static constexpr Lag months(int n) { return {n, LagUnit::months}; }
  static constexpr Lag years(int n) { return {n, LagUnit::years}; }

  bool is_zero() const noexcept { return count == 0; }

  // "12mo", "5d", "1y"
  std::string suffix() const;

  friend auto operator<=>(const Lag&, const Lag&) = default;
};

// Inverse of Lag::suffix. Also accepts "m" for months. Throws ParameterError.
Lag parse_lag(std::string_view text);

// Adds two lags. Years are folded into months; mixing days with calendar units
// is rejected with ParameterError.
Lag combine(Lag a, Lag b);

// d minus lag. Month and year arithmetic keeps the day of month, clamped to
// the length of the target month, except that a month-end date always maps to
// the target month's end (2020-02-29 minus 1mo is 2020-01-31).
Date shift_back(Date d, Lag lag);

}  // namespace fe
