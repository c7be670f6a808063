#include "fe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fe/error.hpp"

namespace fe {

PanelFrame fill_missing(const PanelFrame& frame, std::span<const std::string> columns, FillDirection direction) {
  PanelFrame out = frame;
  for (const auto& name : columns) {
    const auto src = frame.column(name);
    std::vector<double> values(src.begin(), src.end());
    if (direction != FillDirection::none) {
      for (std::size_t a = 0; a < frame.asset_count(); ++a) {
        const auto [begin, end] = frame.asset_rows(a);
        double carry = null_value;
        if (direction == FillDirection::forward) {
          for (std::size_t r = begin; r < end; ++r) {
            if (is_null(values[r])) values[r] = carry;
            else carry = values[r];
          }
        } else {
          for (std::size_t r = end; r-- > begin;) {
            if (is_null(values[r])) values[r] = carry;
            else carry = values[r];
          }
        }
      }
    }
    out = out.with_column(name, std::move(values));
  }
  return out;
}

Date period_end(Date d, Frequency freq) {
  using namespace std::chrono;
  const year_month_day ymd{d};
  switch (freq) {
    case Frequency::daily:
      return d;
    case Frequency::monthly:
      return last_day_of_month(d);
    case Frequency::quarterly: {
      const unsigned q_end = ((static_cast<unsigned>(ymd.month()) - 1) / 3 + 1) * 3;
      return sys_days{ymd.year() / std::chrono::month{q_end} / std::chrono::last};
    }
    case Frequency::annual:
      return sys_days{ymd.year() / December / std::chrono::last};
  }
  return d;
}

namespace {

double aggregate(std::span<const double> values, Aggregation agg) {
  if (agg == Aggregation::last) return values.back();
  double acc = agg == Aggregation::compound ? 1.0 : 0.0;
  std::size_t n = 0;
  for (const double v : values) {
    if (is_null(v)) continue;
    ++n;
    if (agg == Aggregation::compound) acc *= 1.0 + v;
    else acc += v;
  }
  if (n == 0) return null_value;
  switch (agg) {
    case Aggregation::sum:
      return acc;
    case Aggregation::mean:
      return acc / static_cast<double>(n);
    case Aggregation::compound:
      return acc - 1.0;
    case Aggregation::last:
      break;
  }
  return null_value;
}

}  // namespace

PanelFrame resample(const PanelFrame& frame, Frequency freq, Aggregation aggregation) {
  return resample(frame, freq, {}, aggregation);
}

PanelFrame resample(const PanelFrame& frame, Frequency freq, std::span<const ColumnAggregation> per_column,
                    Aggregation fallback) {
  if (frame.empty()) throw ParameterError("cannot resample an empty frame");
  const auto names = frame.column_names();
  std::vector<Aggregation> aggs(names.size(), fallback);
  for (const auto& pc : per_column) {
    const auto it = std::find(names.begin(), names.end(), pc.column);
    if (it == names.end()) throw SchemaError("unknown column '" + pc.column + "'");
    aggs[static_cast<std::size_t>(it - names.begin())] = pc.aggregation;
  }
  std::vector<std::span<const double>> src;
  for (const auto& n : names) src.push_back(frame.column(n));

  auto keys = std::make_shared<PanelFrame::Keys>();
  keys->offsets.push_back(0);
  std::vector<NamedColumn> cols;
  for (const auto& n : names) cols.push_back({n, {}});

  std::vector<double> scratch;
  for (std::size_t a = 0; a < frame.asset_count(); ++a) {
    const auto [begin, end] = frame.asset_rows(a);
    keys->assets.push_back(frame.asset_ids()[a]);
    std::size_t r = begin;
    while (r < end) {
      const Date label = period_end(frame.date(r), freq);
      std::size_t stop = r;
      while (stop < end && period_end(frame.date(stop), freq) == label) ++stop;
      keys->dates.push_back(label);
      keys->asset_of_row.push_back(static_cast<std::uint32_t>(a));
      for (std::size_t c = 0; c < cols.size(); ++c) {
        cols[c].values.push_back(aggregate(src[c].subspan(r, stop - r), aggs[c]));
      }
      r = stop;
    }
    keys->offsets.push_back(keys->dates.size());
  }
  return PanelFrame::from_sorted_keys(std::move(keys), std::move(cols));
}

double nearest_rank_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return null_value;
  const double n = static_cast<double>(sorted.size());
  // The 1e-9 slack keeps q·n that should be integral (0.3 · 10) from being
  // bumped up a rank by representation error.
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> winsorize_cross_section(std::span<const double> values, double lower_q, double upper_q) {
  if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
    throw ParameterError("winsorize quantiles must satisfy 0 <= lower < upper <= 1");
  }
  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (const double v : values) {
    if (!is_null(v)) sorted.push_back(v);
  }
  std::vector<double> out(values.begin(), values.end());
  if (sorted.empty()) return out;
  std::sort(sorted.begin(), sorted.end());
  const double lo = nearest_rank_quantile(sorted, lower_q);
  const double hi = nearest_rank_quantile(sorted, upper_q);
  for (double& v : out) {
    if (!is_null(v)) v = std::clamp(v, lo, hi);
  }
  return out;
}

std::vector<double> zscore_cross_section(std::span<const double> values) {
  std::vector<double> out(values.size(), null_value);
  double sum = 0.0;
  double lo = INFINITY;
  double hi = -INFINITY;
  std::size_t n = 0;
  for (const double v : values) {
    if (is_null(v)) continue;
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++n;
  }
  if (n < 2 || lo == hi) return out;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : values) {
    if (!is_null(v)) ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!is_null(values[i])) out[i] = (values[i] - mean) / sd;
  }
  return out;
}

namespace {

template <typename Fn>
std::vector<double> per_date(const PanelFrame& frame, std::span<const double> values, Fn&& fn) {
  if (values.size() != frame.rows()) throw SchemaError("value vector does not match frame rows");
  std::vector<double> out(values.size(), null_value);
  std::vector<double> section;
  for (const auto& rows : cross_sections(frame)) {
    section.clear();
    for (const std::size_t r : rows) section.push_back(values[r]);
    const auto transformed = fn(std::span<const double>(section));
    for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i]] = transformed[i];
  }
  return out;
}

}  // namespace

std::vector<double> winsorize_by_date(const PanelFrame& frame, std::span<const double> values, double lower_q,
                                      double upper_q) {
  // Validate even when the frame is empty.
  winsorize_cross_section({}, lower_q, upper_q);
  return per_date(frame, values,
                  [&](std::span<const double> s) { return winsorize_cross_section(s, lower_q, upper_q); });
}

std::vector<double> zscore_by_date(const PanelFrame& frame, std::span<const double> values) {
  return per_date(frame, values, [](std::span<const double> s) { return zscore_cross_section(s); });
}

std::vector<double> winsorize(const PanelFrame& frame, std::string_view column, double lower_q, double upper_q) {
  return winsorize_by_date(frame, frame.column(column), lower_q, upper_q);
}

std::vector<double> zscore(const PanelFrame& frame, std::string_view column) {
  return zscore_by_date(frame, frame.column(column));
}

}  // namespace fe
