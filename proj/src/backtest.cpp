#include "fe/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fe/diagnostics.hpp"
#include "fe/error.hpp"

namespace fe {

namespace {

struct Scored {
  double score;
  std::size_t index;
};

// Indices into `scored` of the long leg then the short leg, given ids are
// ordered by index.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> pick_legs(std::vector<Scored> scored,
                                                                        const StrategyConfig& config) {
  const bool two_legs = config.mode == Mode::long_short;
  if (scored.empty() || (two_legs && scored.size() < 2)) return {};
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return a.score > b.score || (a.score == b.score && a.index < b.index);
  });
  const std::size_t n = config.selection.resolve(scored.size(), two_legs);
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> legs;
  for (std::size_t i = 0; i < n; ++i) legs.first.push_back(scored[i].index);
  if (two_legs) {
    for (std::size_t i = scored.size() - n; i < scored.size(); ++i) legs.second.push_back(scored[i].index);
  }
  return legs;
}

double directional(double value, Direction d) { return d == Direction::higher_is_better ? value : -value; }

struct DenseStep {
  double capital = 0;
  double turnover = 0;
  double fee = 0;
  std::size_t null_returns = 0;
};

// `weights` enters holding the previous realized weights and leaves holding
// the new ones.
DenseStep dense_step(double capital, std::vector<double>& weights, const std::vector<double>& target,
                     std::span<const double> returns, double fee_bps) {
  DenseStep out;
  if (capital <= 0.0) {
    std::fill(weights.begin(), weights.end(), 0.0);
    return out;
  }
  for (std::size_t i = 0; i < weights.size(); ++i) out.turnover += std::abs(target[i] - weights[i]);
  out.fee = capital * out.turnover * fee_bps / 10000.0;

  double growth = 1.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 0.0) continue;
    double r = returns[i];
    if (is_null(r)) {
      r = 0.0;
      ++out.null_returns;
    }
    growth += target[i] * r;
  }
  out.capital = std::max(0.0, (capital - out.fee) * growth);
  if (out.capital == 0.0 || growth <= 0.0) {
    out.capital = 0.0;
    std::fill(weights.begin(), weights.end(), 0.0);
    return out;
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = is_null(returns[i]) ? 0.0 : returns[i];
    weights[i] = target[i] == 0.0 ? 0.0 : target[i] * (1.0 + r) / growth;
  }
  return out;
}

}  // namespace

std::size_t Selection::resolve(std::size_t universe, bool two_legs) const {
  if (!(value > 0.0)) throw ParameterError("selection must be positive");
  std::size_t n = 0;
  if (kind == Kind::fraction) {
    if (value > 1.0) throw ParameterError("selection fraction must not exceed 1");
    n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(value * static_cast<double>(universe))));
  } else {
    if (value != std::floor(value)) throw ParameterError("selection count must be an integer");
    n = static_cast<std::size_t>(value);
  }
  n = std::min(n, universe);
  if (two_legs) n = std::max<std::size_t>(1, std::min(n, universe / 2));
  return n;
}

void StrategyConfig::validate() const {
  if (!(fee_bps >= 0.0) || !std::isfinite(fee_bps)) throw ParameterError("fee must be a non-negative number of bps");
  if (!(initial_capital > 0.0) || !std::isfinite(initial_capital)) {
    throw ParameterError("initial capital must be positive");
  }
  if (!std::isfinite(risk_free_rate)) throw ParameterError("risk-free rate must be finite");
  if (periods_per_year && !(*periods_per_year > 0.0)) throw ParameterError("periods_per_year must be positive");
  selection.resolve(1, false);
}

Weights rank_and_select(std::span<const ScoredAsset> cross_section, const StrategyConfig& config) {
  std::vector<const ScoredAsset*> assets;
  for (const auto& a : cross_section) {
    if (!is_null(a.value)) assets.push_back(&a);
  }
  std::sort(assets.begin(), assets.end(), [](const ScoredAsset* a, const ScoredAsset* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < assets.size(); ++i) {
    if (assets[i]->id == assets[i - 1]->id) throw IntegrityError("duplicate asset '" + assets[i]->id + "'");
  }
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < assets.size(); ++i) scored.push_back({directional(assets[i]->value, config.direction), i});

  const auto [longs, shorts] = pick_legs(std::move(scored), config);
  Weights w;
  for (const auto i : longs) w[assets[i]->id] = 1.0 / static_cast<double>(longs.size());
  for (const auto i : shorts) w[assets[i]->id] = -1.0 / static_cast<double>(shorts.size());
  return w;
}

StepResult step(double capital, const Weights& prev, const Weights& target,
                const std::map<std::string, double, std::less<>>& returns, double fee_bps) {
  if (!(capital >= 0.0)) throw ParameterError("capital must be non-negative");
  if (!(fee_bps >= 0.0)) throw ParameterError("fee must be non-negative");
  std::vector<std::string> ids;
  for (const auto& [id, w] : prev) ids.push_back(id);
  for (const auto& [id, w] : target) {
    if (!prev.contains(id)) ids.push_back(id);
  }
  std::vector<double> weights(ids.size(), 0.0), tgt(ids.size(), 0.0), rets(ids.size(), null_value);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (const auto it = prev.find(ids[i]); it != prev.end()) weights[i] = it->second;
    if (const auto it = target.find(ids[i]); it != target.end()) tgt[i] = it->second;
    if (const auto it = returns.find(ids[i]); it != returns.end()) rets[i] = it->second;
  }
  const DenseStep s = dense_step(capital, weights, tgt, rets, fee_bps);
  StepResult out{.capital = s.capital, .turnover = s.turnover, .fee = s.fee, .null_returns = s.null_returns};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (weights[i] != 0.0) out.realized[ids[i]] = weights[i];
  }
  return out;
}

double infer_periods_per_year(std::span<const Date> dates) {
  if (dates.size() < 2) return 12.0;
  std::vector<long> gaps;
  for (std::size_t i = 1; i < dates.size(); ++i) gaps.push_back((dates[i] - dates[i - 1]).count());
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const long median = gaps[gaps.size() / 2];
  if (median < 7) return 252.0;
  if (median < 28) return 52.0;
  return 12.0;
}

BacktestReport compute_metrics(const EquityCurve& curve, double risk_free_rate, double periods_per_year) {
  BacktestReport rep;
  const auto& c = curve.capital;
  if (c.size() != curve.dates.size()) throw ParameterError("equity curve dates and capital differ in length");
  rep.periods_per_year = periods_per_year;
  if (!c.empty()) rep.final_capital = c.back();
  if (c.size() < 2) return rep;
  if (!(c.front() > 0.0)) throw ParameterError("equity curve must start with positive capital");

  const double ratio = c.back() / c.front();
  const auto periods = static_cast<double>(c.size() - 1);
  rep.total_return = ratio - 1.0;
  rep.annualized_return = std::pow(ratio, periods_per_year / periods) - 1.0;

  std::vector<double> rets;
  for (std::size_t i = 1; i < c.size(); ++i) rets.push_back(c[i - 1] > 0.0 ? c[i] / c[i - 1] - 1.0 : 0.0);
  const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / static_cast<double>(rets.size());
  if (rets.size() >= 2) {
    double ss = 0.0;
    for (const double r : rets) ss += (r - mean) * (r - mean);
    rep.annualized_volatility = std::sqrt(ss / static_cast<double>(rets.size() - 1)) * std::sqrt(periods_per_year);
  }
  if (rep.annualized_volatility > 0.0) {
    rep.sharpe = (rep.annualized_return - risk_free_rate) / rep.annualized_volatility;
  }

  double peak = c.front();
  double mdd = 0.0;
  for (const double v : c) {
    peak = std::max(peak, v);
    if (peak > 0.0) mdd = std::max(mdd, (peak - v) / peak);
  }
  rep.max_drawdown = mdd;
  return rep;
}

BacktestResult run_backtest(const PanelFrame& factors, std::string_view factor_column, const PanelFrame& returns,
                            std::string_view return_column, const StrategyConfig& config, bool record_weights) {
  config.validate();
  const auto fvals = factors.column(factor_column);
  const auto rvals = returns.column(return_column);

  std::vector<Date> clock(returns.dates().begin(), returns.dates().end());
  std::sort(clock.begin(), clock.end());
  clock.erase(std::unique(clock.begin(), clock.end()), clock.end());
  if (clock.size() < 2) throw EmptyUniverseError("returns cover fewer than two dates");

  // Factor assets define the tradable universe; ids are sorted, so index
  // order is id order.
  const auto ids = factors.asset_ids();
  const std::size_t n_assets = ids.size();

  // Return matrix laid out by clock date, sparse in assets.
  std::vector<std::vector<std::pair<std::size_t, double>>> rets_by_date(clock.size());
  for (std::size_t a = 0; a < returns.asset_count(); ++a) {
    const auto& id = returns.asset_ids()[a];
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) continue;
    const auto fa = static_cast<std::size_t>(it - ids.begin());
    const auto [begin, end] = returns.asset_rows(a);
    for (std::size_t r = begin; r < end; ++r) {
      const auto d = static_cast<std::size_t>(std::lower_bound(clock.begin(), clock.end(), returns.date(r)) -
                                              clock.begin());
      rets_by_date[d].emplace_back(fa, rvals[r]);
    }
  }

  std::vector<std::size_t> cursor(n_assets);
  for (std::size_t a = 0; a < n_assets; ++a) cursor[a] = factors.asset_rows(a).first;

  BacktestResult result;
  auto& curve = result.curve;
  auto& rep = result.report;
  curve.dates = clock;
  curve.capital.assign(clock.size(), 0.0);
  curve.capital[0] = config.initial_capital;

  std::vector<double> weights(n_assets, 0.0), target(n_assets, 0.0), period_returns(n_assets, null_value);
  std::size_t null_returns = 0;
  bool any_universe = false;
  double capital = config.initial_capital;
  std::vector<WeightsRecord> records;

  for (std::size_t i = 1; i < clock.size(); ++i) {
    const Date formed = clock[i - 1];
    std::vector<Scored> scored;
    for (std::size_t a = 0; a < n_assets; ++a) {
      const auto end = factors.asset_rows(a).second;
      while (cursor[a] < end && factors.date(cursor[a]) <= formed) ++cursor[a];
      if (cursor[a] == factors.asset_rows(a).first) continue;
      const double v = fvals[cursor[a] - 1];
      if (!is_null(v)) scored.push_back({directional(v, config.direction), a});
    }
    any_universe = any_universe || !scored.empty();

    const bool rebalance =
        config.rebalance == Rebalance::daily || i == 1 || last_day_of_month(formed) != last_day_of_month(clock[i - 2]);
    if (rebalance) {
      std::fill(target.begin(), target.end(), 0.0);
      const auto [longs, shorts] = pick_legs(std::move(scored), config);
      for (const auto a : longs) target[a] = 1.0 / static_cast<double>(longs.size());
      for (const auto a : shorts) target[a] = -1.0 / static_cast<double>(shorts.size());
    } else {
      target = weights;
    }

    std::fill(period_returns.begin(), period_returns.end(), null_value);
    for (const auto& [a, r] : rets_by_date[i]) period_returns[a] = r;

    if (record_weights) {
      WeightsRecord rec{.formed = formed, .applied = clock[i]};
      for (std::size_t a = 0; a < n_assets; ++a) {
        if (target[a] != 0.0) rec.target[ids[a]] = target[a];
      }
      records.push_back(std::move(rec));
    }
    const DenseStep s = dense_step(capital, weights, target, period_returns, config.fee_bps);
    if (record_weights) {
      records.back().turnover = s.turnover;
      records.back().fee = s.fee;
    }
    capital = s.capital;
    null_returns += s.null_returns;
    curve.capital[i] = capital;
  }

  if (!any_universe) {
    throw EmptyUniverseError("no factor values for '" + std::string(factor_column) + "' at or before the return dates");
  }
  if (null_returns > 0) {
    diag::warn("backtest " + config.factor + ": " + std::to_string(null_returns) +
               " held position-periods had no return and were treated as cash");
  }

  const double ppy = config.periods_per_year.value_or(infer_periods_per_year(clock));
  rep = compute_metrics(curve, config.risk_free_rate, ppy);
  rep.null_returns = null_returns;
  rep.weights = std::move(records);
  return result;
}

}  // namespace fe
