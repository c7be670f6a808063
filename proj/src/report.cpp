#include "fe/report.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "fe/io.hpp"

namespace fe {

namespace {

using ojson = nlohmann::ordered_json;

ojson num(double v) { return is_null(v) || !std::isfinite(v) ? ojson(nullptr) : ojson(v); }

const char* name(Direction d) { return d == Direction::higher_is_better ? "higher_is_better" : "lower_is_better"; }
const char* name(Mode m) { return m == Mode::long_only ? "long_only" : "long_short"; }
const char* name(Rebalance r) { return r == Rebalance::daily ? "daily" : "monthly"; }

ojson metrics(const BacktestReport& r) {
  ojson j;
  j["total_return"] = num(r.total_return);
  j["annualized_return"] = num(r.annualized_return);
  j["annualized_volatility"] = num(r.annualized_volatility);
  j["sharpe_ratio"] = num(r.sharpe);
  j["max_drawdown"] = num(r.max_drawdown);
  j["final_capital"] = num(r.final_capital);
  j["periods_per_year"] = num(r.periods_per_year);
  j["null_returns"] = r.null_returns;
  return j;
}

}  // namespace

std::string backtest_json(const StrategyConfig& config, const BacktestReport& report, bool include_weights) {
  ojson j;
  j["factor"] = config.factor;
  ojson s;
  s["direction"] = name(config.direction);
  s["mode"] = name(config.mode);
  if (config.selection.kind == Selection::Kind::fraction) {
    s["selection_fraction"] = config.selection.value;
  } else {
    s["selection_count"] = static_cast<std::size_t>(config.selection.value);
  }
  s["fee_bps"] = config.fee_bps;
  s["risk_free_rate"] = config.risk_free_rate;
  s["initial_capital"] = config.initial_capital;
  s["rebalance"] = name(config.rebalance);
  j["strategy"] = std::move(s);
  j["metrics"] = metrics(report);
  if (include_weights) {
    ojson periods = ojson::array();
    for (const auto& w : report.weights) {
      ojson p;
      p["formed"] = format_date(w.formed);
      p["applied"] = format_date(w.applied);
      p["turnover"] = num(w.turnover);
      p["fee"] = num(w.fee);
      ojson weights = ojson::object();
      for (const auto& [id, x] : w.target) weights[id] = x;
      p["weights"] = std::move(weights);
      periods.push_back(std::move(p));
    }
    j["periods"] = std::move(periods);
  }
  return j.dump(2) + "\n";
}

void write_equity_csv(std::ostream& out, const EquityCurve& curve) {
  out << "date,capital\n";
  for (std::size_t i = 0; i < curve.dates.size(); ++i) {
    out << format_date(curve.dates[i]) << ',' << format_number(curve.capital[i]) << '\n';
  }
}

std::vector<LeaderboardEntry> leaderboard(std::vector<LeaderboardEntry> entries, std::size_t top) {
  std::sort(entries.begin(), entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    const bool na = is_null(a.report.sharpe), nb = is_null(b.report.sharpe);
    if (na != nb) return nb;
    if (!na && a.report.sharpe != b.report.sharpe) return a.report.sharpe > b.report.sharpe;
    return a.factor < b.factor;
  });
  if (top > 0 && entries.size() > top) entries.resize(top);
  return entries;
}

std::string leaderboard_json(const std::vector<LeaderboardEntry>& board) {
  ojson arr = ojson::array();
  for (std::size_t i = 0; i < board.size(); ++i) {
    ojson j;
    j["rank"] = i + 1;
    j["factor"] = board[i].factor;
    j["metrics"] = metrics(board[i].report);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_leaderboard_csv(std::ostream& out, const std::vector<LeaderboardEntry>& board) {
  out << "rank,factor,total_return,annualized_return,annualized_volatility,sharpe_ratio,max_drawdown\n";
  for (std::size_t i = 0; i < board.size(); ++i) {
    const auto& r = board[i].report;
    out << i + 1 << ',' << board[i].factor << ',' << format_number(r.total_return) << ','
        << format_number(r.annualized_return) << ',' << format_number(r.annualized_volatility) << ','
        << format_number(r.sharpe) << ',' << format_number(r.max_drawdown) << '\n';
  }
}

}  // namespace fe
