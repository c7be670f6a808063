#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fe/panel.hpp"

namespace fe {

enum class FillDirection { forward, backward, none };

// Replaces nulls in `columns` with the nearest earlier (forward) or later
// (backward) non-null value of the same asset. Leading nulls (forward) and
// trailing nulls (backward) stay null; values never cross asset boundaries.
PanelFrame fill_missing(const PanelFrame& frame, std::span<const std::string> columns, FillDirection direction);

enum class Frequency { daily, monthly, quarterly, annual };

// `compound` is Π(1 + x) − 1 over the period, for periodic returns.
enum class Aggregation { last, sum, mean, compound };

// Last calendar day of the period containing d.
Date period_end(Date d, Frequency freq);

// One row per (asset, period), dated at the period's last calendar day.
// `last` takes the latest row in the period (its cells as-is, nulls
// included); sum/mean/compound skip nulls and give null for an all-null
// period. Throws ParameterError on an empty frame.
PanelFrame resample(const PanelFrame& frame, Frequency freq, Aggregation aggregation);

// Per-column aggregation; columns not listed use `fallback`.
struct ColumnAggregation {
  std::string column;
  Aggregation aggregation;
};
PanelFrame resample(const PanelFrame& frame, Frequency freq, std::span<const ColumnAggregation> per_column,
                    Aggregation fallback);

// Nearest-rank quantile of the non-null values: the ceil(q·n)-th order
// statistic (1-based, at least the first). `sorted` must be ascending and
// free of nulls.
double nearest_rank_quantile(std::span<const double> sorted, double q);

// Clamps one cross-section to its [lower_q, upper_q] nearest-rank quantiles.
// Nulls pass through. Throws ParameterError unless 0 <= lower_q < upper_q <= 1.
std::vector<double> winsorize_cross_section(std::span<const double> values, double lower_q, double upper_q);

// (x − mean) / population std over the non-null values. The whole
// cross-section is null when fewer than two values are non-null or all
// non-null values are equal.
std::vector<double> zscore_cross_section(std::span<const double> values);

// Per-date versions over a frame column; results are row-aligned.
std::vector<double> winsorize(const PanelFrame& frame, std::string_view column, double lower_q, double upper_q);
std::vector<double> zscore(const PanelFrame& frame, std::string_view column);

// Same, over a row-aligned value vector of `frame`.
std::vector<double> winsorize_by_date(const PanelFrame& frame, std::span<const double> values, double lower_q,
                                      double upper_q);
std::vector<double> zscore_by_date(const PanelFrame& frame, std::span<const double> values);

}  // namespace fe
