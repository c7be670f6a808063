#include "fe/date.hpp"

#include <charconv>
#include <cstdio>

#include "fe/error.hpp"

namespace fe {

using namespace std::chrono;

Date make_date(int year, unsigned month, unsigned day) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    throw ParameterError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                         "-" + std::to_string(day));
  }
  return sys_days{ymd};
}

namespace {

bool parse_digits(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_digits(text.substr(0, 4), y) || !parse_digits(text.substr(5, 2), m) ||
      !parse_digits(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date last_day_of_month(Date d) {
  const year_month_day ymd{d};
  return sys_days{ymd.year() / ymd.month() / std::chrono::last};
}

bool is_month_end(Date d) { return last_day_of_month(d) == d; }

std::string Lag::suffix() const {
  switch (unit) {
    case LagUnit::days:
      return std::to_string(count) + "d";
    case LagUnit::months:
      return std::to_string(count) + "mo";
    case LagUnit::years:
      return std::to_string(count) + "y";
  }
  return {};
}

Lag parse_lag(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  int n = 0;
  if (i == 0 || !parse_digits(text.substr(0, i), n)) {
    throw ParameterError("invalid lag '" + std::string(text) + "'");
  }
  const std::string_view unit = text.substr(i);
  if (unit == "mo" || unit == "m") return Lag::months(n);
  if (unit == "d") return Lag::days(n);
  if (unit == "y") return Lag::years(n);
  throw ParameterError("invalid lag unit in '" + std::string(text) + "' (expected d, mo or y)");
}

Lag combine(Lag a, Lag b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.unit == b.unit) return {a.count + b.count, a.unit};
  if (a.unit == LagUnit::days || b.unit == LagUnit::days) {
    throw ParameterError("cannot combine lags " + a.suffix() + " and " + b.suffix());
  }
  auto in_months = [](Lag l) { return l.unit == LagUnit::years ? 12 * l.count : l.count; };
  return Lag::months(in_months(a) + in_months(b));
}

Date shift_back(Date d, Lag lag) {
  if (lag.count < 0) throw ParameterError("negative lag " + std::to_string(lag.count));
  if (lag.unit == LagUnit::days) return d - std::chrono::days{lag.count};

  const int total = lag.unit == LagUnit::years ? 12 * lag.count : lag.count;
  const year_month_day ymd{d};
  const year_month ym = ymd.year() / ymd.month() - std::chrono::months{total};
  const year_month_day_last target_end{ym.year(), month_day_last{ym.month()}};
  if (is_month_end(d) || ymd.day() > target_end.day()) return sys_days{target_end};
  return sys_days{ym / ymd.day()};
}

}  // namespace fe
