#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fe/backtest.hpp"

namespace fe {

// Metrics, strategy settings and (optionally) the per-period weights as
// pretty-printed JSON. Undefined metrics are written as null.
std::string backtest_json(const StrategyConfig& config, const BacktestReport& report, bool include_weights);

// `date,capital` rows, plot-ready.
void write_equity_csv(std::ostream& out, const EquityCurve& curve);

struct LeaderboardEntry {
  std::string factor;
  BacktestReport report;
};

// Sorted by Sharpe descending (null Sharpe last, then by name), truncated
// to `top` entries when top > 0.
std::vector<LeaderboardEntry> leaderboard(std::vector<LeaderboardEntry> entries, std::size_t top);
std::string leaderboard_json(const std::vector<LeaderboardEntry>& board);
void write_leaderboard_csv(std::ostream& out, const std::vector<LeaderboardEntry>& board);

}  // namespace fe
