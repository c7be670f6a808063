#pragma once

// Fixtures shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <random>
#include <string>
#include <vector>

#include "fe/backtest.hpp"
#include "fe/mispricing.hpp"
#include "fe/panel.hpp"
#include "fe/registry.hpp"
#include "fe/synth.hpp"
#include "oracle/oracle.hpp"

namespace testing_support {

inline fe::Date day(long n) { return fe::Date{std::chrono::days{n}}; }

inline fe::PanelFrame frame_from(const std::vector<oracle::Observation>& obs, const std::string& column) {
  fe::Table t;
  std::vector<double> v;
  for (const auto& o : obs) {
    t.ids.push_back(o.id);
    t.dates.push_back(day(o.day));
    v.push_back(o.value);
  }
  t.columns.push_back({column, std::move(v)});
  return fe::PanelFrame::from_table(std::move(t));
}

inline fe::Extras extras_for(const fe::SynthData& data) {
  fe::Extras e = fe::default_coefficient_extras();
  e.tables.emplace(std::string(fe::kIndexTable), data.index);
  return e;
}

inline fe::ComputeOutput compute_all(const fe::PanelFrame& panel, const fe::Extras& extras) {
  static const fe::FactorRegistry& reg = [] () -> const fe::FactorRegistry& {
    static fe::FactorRegistry r;
    fe::register_mispricing_factors(r);
    return r;
  }();
  fe::ComputeRequest req;
  req.extras = extras;
  return fe::compute(reg, panel, req);
}

inline std::string asset_name(std::size_t i) {
  std::string n = std::to_string(i);
  return "S" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

// Random factor and return observations over a shared daily or monthly
// clock, with nulls and holes.
struct RandomBacktestCase {
  std::vector<oracle::Observation> factor, returns;
  oracle::StrategySpec spec;
};

inline RandomBacktestCase random_backtest_case(std::mt19937_64& rng, bool allow_wipeout) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  RandomBacktestCase c;
  const int assets = pick(1, 12);
  const int periods = pick(5, 60);
  const bool monthly = pick(0, 1) == 1;
  std::vector<long> clock;
  long d = oracle::days_from_civil(2015, 1, 31);
  for (int i = 0; i < periods; ++i) {
    clock.push_back(d);
    if (monthly) {
      d = oracle::shift_back(d, -1, 'm');
    } else {
      d += pick(1, 3);
    }
  }
  const double scale = allow_wipeout && pick(0, 3) == 0 ? 0.8 : 0.05;
  for (int a = 0; a < assets; ++a) {
    const std::string id = asset_name(static_cast<std::size_t>(a));
    for (std::size_t i = 0; i < clock.size(); ++i) {
      if (u(0, 1) < 0.9) {
        double r = u(-scale, scale);
        if (u(0, 1) < 0.05) r = std::numeric_limits<double>::quiet_NaN();
        c.returns.push_back({id, clock[i], r});
      }
      if (u(0, 1) < 0.6) {
        double f = std::round(u(-5, 5) * 4) / 4;  // coarse grid so ties happen
        if (u(0, 1) < 0.1) f = std::numeric_limits<double>::quiet_NaN();
        c.factor.push_back({id, clock[i] - pick(0, 2), f});
      }
    }
  }
  // Returns and factor rows must have unique (id, day) keys.
  auto dedupe = [](std::vector<oracle::Observation>& v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      return std::tie(a.id, a.day) < std::tie(b.id, b.day);
    });
    v.erase(std::unique(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id == b.id && a.day == b.day; }),
            v.end());
  };
  dedupe(c.factor);
  dedupe(c.returns);
  // At least one usable value before the first formation date.
  c.factor.push_back({asset_name(0), clock[0] - 5, 1.0});
  dedupe(c.factor);
  if (c.returns.empty()) c.returns.push_back({asset_name(0), clock[0], 0.0});

  c.spec.higher_is_better = pick(0, 1) == 1;
  c.spec.long_short = pick(0, 1) == 1;
  c.spec.fraction = pick(0, 1) == 1;
  c.spec.selection = c.spec.fraction ? u(0.05, 1.0) : pick(1, 6);
  const double fees[] = {0, 10, 50, 100, 500};
  c.spec.fee_bps = fees[pick(0, 4)];
  c.spec.initial_capital = u(0.5, 100);
  c.spec.monthly_rebalance = pick(0, 3) == 0;
  return c;
}

inline fe::StrategyConfig to_config(const oracle::StrategySpec& s) {
  fe::StrategyConfig c;
  c.factor = "f";
  c.direction = s.higher_is_better ? fe::Direction::higher_is_better : fe::Direction::lower_is_better;
  c.mode = s.long_short ? fe::Mode::long_short : fe::Mode::long_only;
  c.selection = s.fraction ? fe::Selection::fraction(s.selection)
                           : fe::Selection::count(static_cast<std::size_t>(s.selection));
  c.fee_bps = s.fee_bps;
  c.initial_capital = s.initial_capital;
  c.rebalance = s.monthly_rebalance ? fe::Rebalance::monthly : fe::Rebalance::daily;
  return c;
}

}  // namespace testing_support
