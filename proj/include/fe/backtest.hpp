#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fe/date.hpp"
#include "fe/panel.hpp"

namespace fe {

enum class Direction { higher_is_better, lower_is_better };
enum class Mode { long_only, long_short };
enum class Rebalance { daily, monthly };

// Assets per leg, as a count or a fraction of the ranked universe.
struct Selection {
  enum class Kind { fraction, count };
  Kind kind = Kind::fraction;
  double value = 0.1;

  static Selection fraction(double f) { return {Kind::fraction, f}; }
  static Selection count(std::size_t n) { return {Kind::count, static_cast<double>(n)}; }
  static Selection all() { return fraction(1.0); }

  // Legs hold max(1, floor(f·N)) or min(count, N) assets; long/short legs
  // are capped at N/2 so they never overlap. Throws ParameterError on a
  // non-positive value or a fraction above 1.
  std::size_t resolve(std::size_t universe, bool two_legs) const;
};

struct StrategyConfig {
  std::string factor;
  Direction direction = Direction::higher_is_better;
  Mode mode = Mode::long_only;
  Selection selection;
  double fee_bps = 100.0;
  double risk_free_rate = 0.05;
  double initial_capital = 1.0;
  Rebalance rebalance = Rebalance::daily;
  // Defaults to 252 for a daily clock and 12 for a monthly one.
  std::optional<double> periods_per_year;

  // Throws ParameterError.
  void validate() const;
};

using Weights = std::map<std::string, double, std::less<>>;

struct ScoredAsset {
  std::string id;
  double value = 0;
};

// Equal-weight target portfolio. Nulls are dropped before ranking; ties go to
// the smaller id. An empty (or, long/short, single-asset) cross-section gives
// no positions.
Weights rank_and_select(std::span<const ScoredAsset> cross_section, const StrategyConfig& config);

struct StepResult {
  double capital = 0;
  // Post-return weights as fractions of the new capital.
  Weights realized;
  double turnover = 0;
  double fee = 0;
  std::size_t null_returns = 0;
};

// One period: rebalance from `prev` to `target` paying fee_bps per unit of
// turnover, then earn `returns`. A held asset with no return (or a null one)
// contributes 0 and is counted. Capital is floored at 0 and stays there.
StepResult step(double capital, const Weights& prev, const Weights& target,
                const std::map<std::string, double, std::less<>>& returns, double fee_bps);

struct EquityCurve {
  std::vector<Date> dates;
  std::vector<double> capital;
};

struct WeightsRecord {
  Date formed;   // factor values as of this date
  Date applied;  // earn the returns dated here
  Weights target;
  double turnover = 0;
  double fee = 0;
};

// Null fields (NaN) when the curve is shorter than two points; Sharpe is
// also null when volatility is zero.
struct BacktestReport {
  double total_return = null_value;
  double annualized_return = null_value;
  double annualized_volatility = null_value;
  double sharpe = null_value;
  double max_drawdown = null_value;
  double final_capital = null_value;
  double periods_per_year = null_value;
  std::size_t null_returns = 0;
  std::vector<WeightsRecord> weights;
};

BacktestReport compute_metrics(const EquityCurve& curve, double risk_free_rate, double periods_per_year);

// 252 when the median spacing is under a week, 52 under a month, else 12.
double infer_periods_per_year(std::span<const Date> dates);

struct BacktestResult {
  EquityCurve curve;
  BacktestReport report;
};

// The clock is the sorted set of dates in `returns`. Weights used over
// (d[i-1], d[i]] come from each asset's latest factor value dated at or
// before d[i-1]; the curve starts at initial_capital on d[0]. Throws
// SchemaError for missing columns and EmptyUniverseError when no clock date
// has a usable factor value.
BacktestResult run_backtest(const PanelFrame& factors, std::string_view factor_column, const PanelFrame& returns,
                            std::string_view return_column, const StrategyConfig& config,
                            bool record_weights = true);

}  // namespace fe
