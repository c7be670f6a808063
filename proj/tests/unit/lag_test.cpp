#include <doctest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "fe/error.hpp"
#include "fe/lag.hpp"

using namespace testing_support;
using fe::Lag;
using fe::null_value;

namespace {

fe::PanelFrame monthly_panel(const std::vector<std::string>& ids, int months, std::mt19937_64* rng = nullptr) {
  fe::Table t;
  std::vector<double> mv, ta;
  for (const auto& id : ids) {
    fe::Date d = fe::make_date(2020, 1, 31);
    for (int i = 0; i < months; ++i) {
      t.ids.push_back(id);
      t.dates.push_back(d);
      const double v = rng ? std::uniform_real_distribution<double>(1, 2)((*rng)) : i + 1.0;
      mv.push_back(v);
      ta.push_back(10 * v);
      d = fe::last_day_of_month(d + std::chrono::days{1});
    }
  }
  t.columns.push_back({"mv", std::move(mv)});
  t.columns.push_back({"ta", std::move(ta)});
  return fe::PanelFrame::from_table(std::move(t));
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_SUITE("lag_manager") {
  TEST_CASE("date arithmetic") {
    CHECK(fe::shift_back(fe::make_date(2020, 3, 31), Lag::months(1)) == fe::make_date(2020, 2, 29));
    CHECK(fe::shift_back(fe::make_date(2020, 2, 29), Lag::months(1)) == fe::make_date(2020, 1, 31));
    CHECK(fe::shift_back(fe::make_date(2020, 3, 30), Lag::months(1)) == fe::make_date(2020, 2, 29));
    CHECK(fe::shift_back(fe::make_date(2020, 5, 15), Lag::months(3)) == fe::make_date(2020, 2, 15));
    CHECK(fe::shift_back(fe::make_date(2020, 2, 29), Lag::years(1)) == fe::make_date(2019, 2, 28));
    CHECK(fe::shift_back(fe::make_date(2020, 3, 1), Lag::days(1)) == fe::make_date(2020, 2, 29));
    CHECK(fe::combine(Lag::months(3), Lag::years(1)) == Lag::months(15));
    CHECK_THROWS_AS(fe::combine(Lag::days(3), Lag::months(1)), fe::ParameterError);
    CHECK(fe::parse_lag("12mo") == Lag::months(12));
    CHECK(fe::parse_lag("5d") == Lag::days(5));
    CHECK(fe::parse_lag("1y") == Lag::years(1));
    CHECK_THROWS_AS(fe::parse_lag("-1mo"), fe::ParameterError);
    CHECK_THROWS_AS(fe::parse_lag("3w"), fe::ParameterError);
  }

  TEST_CASE("month arithmetic agrees with the calendar oracle") {
    for (long day = oracle::days_from_civil(1999, 1, 1); day < oracle::days_from_civil(2005, 1, 1); day += 3) {
      for (int k : {1, 2, 11, 12, 15}) {
        CHECK(oracle::to_days(fe::shift_back(testing_support::day(day), Lag::months(k))) ==
              oracle::shift_back(day, k, 'm'));
      }
    }
  }

  TEST_CASE("request names and idempotence") {
    fe::OffsetRegistry reg({"mv", "ta"});
    CHECK(reg.request({"mv", Lag::months(12)}) == "mv_lag_12mo");
    CHECK(reg.request({"mv", Lag::months(12)}) == "mv_lag_12mo");
    CHECK(reg.pending().size() == 1);
    CHECK(reg.request({"ta", Lag::months(0)}) == "ta");
    CHECK(reg.pending().size() == 1);
    CHECK(reg.request({"ta", Lag::days(5), Lag::days(3)}) == "ta_lag_5d_within_3d");
    CHECK(reg.request({"ta", Lag::years(1)}) == "ta_lag_1y");
    CHECK_THROWS_AS(reg.request({"price", Lag::months(1)}), fe::SchemaError);
  }

  TEST_CASE("lag of one month reads the prior month; first row is null") {
    const auto f = monthly_panel({"A"}, 12);
    const std::vector<std::string> cols{"mv"};
    const auto g = fe::join_with_offset(f, Lag::months(1), cols);
    const auto lagged = g.column("mv_lag_1mo");
    CHECK(fe::is_null(lagged[0]));
    CHECK(lagged[1] == f.column("mv")[0]);
    for (std::size_t r = 1; r < f.rows(); ++r) CHECK(lagged[r] == f.column("mv")[r - 1]);
  }

  TEST_CASE("as-of picks the latest date at or before the target") {
    fe::Table t;
    t.ids = {"A", "A", "A"};
    t.dates = {fe::make_date(2020, 6, 1), fe::make_date(2020, 7, 1), fe::make_date(2020, 7, 15)};
    t.columns.push_back({"mv", {1, 2, 3}});
    const auto f = fe::PanelFrame::from_table(std::move(t));
    // 2020-07-15 minus 1 month is 2020-06-15.
    const std::vector<std::string> cols{"mv"};
    const auto g = fe::join_with_offset(f, Lag::months(1), cols);
    CHECK(g.column("mv_lag_1mo")[2] == 1);
    // Exact-date matches count (at-or-before).
    const auto h = fe::join_with_offset(f, Lag::days(14), cols);
    CHECK(h.column("mv_lag_14d")[2] == 2);
  }

  TEST_CASE("staleness bound") {
    fe::Table t;
    t.ids = {"A", "A"};
    t.dates = {fe::make_date(2020, 1, 31), fe::make_date(2020, 6, 30)};
    t.columns.push_back({"mv", {1, 2}});
    const auto f = fe::PanelFrame::from_table(std::move(t));
    const std::vector<fe::OffsetKey> keys{{"mv", Lag::months(1), std::nullopt}, {"mv", Lag::months(1), Lag::months(1)}};
    const auto g = fe::join_with_offset(f, Lag::months(1), keys);
    CHECK(g.column("mv_lag_1mo")[1] == 1);
    CHECK(fe::is_null(g.column("mv_lag_1mo_within_1mo")[1]));
  }

  TEST_CASE("pass counting, empty pending and idempotence") {
    const auto f = monthly_panel({"A", "B"}, 24);
    fe::OffsetRegistry reg({"mv", "ta"});
    CHECK(fe::identical(reg.compute_offset_data(f), f));
    CHECK(reg.join_passes() == 0);

    reg.request({"mv", Lag::months(12)});
    reg.request({"ta", Lag::months(12)});
    reg.request({"ta", Lag::months(3)});
    const auto g = reg.compute_offset_data(f);
    CHECK(reg.join_passes() == 2);
    CHECK(reg.pending().empty());
    CHECK(reg.materialized().size() == 3);
    for (const auto& k : reg.materialized()) CHECK_FALSE(reg.pending().contains(k));

    const auto h = reg.compute_offset_data(g);
    CHECK(reg.join_passes() == 2);
    CHECK(fe::identical(g, h));
  }

  TEST_CASE("batch and one-by-one materialization agree") {
    std::mt19937_64 rng(5);
    const auto f = monthly_panel({"A", "B", "C"}, 30, &rng);
    const std::vector<fe::OffsetKey> keys{{"mv", Lag::months(1)}, {"ta", Lag::months(1)}, {"mv", Lag::months(12)},
                                          {"ta", Lag::days(45)}, {"mv", Lag::years(2)}};
    fe::OffsetRegistry batch({"mv", "ta"});
    for (const auto& k : keys) batch.request(k);
    const auto all = batch.compute_offset_data(f);

    fe::PanelFrame single = f;
    for (const auto& k : keys) {
      fe::OffsetRegistry one({"mv", "ta"});
      one.request(k);
      single = one.compute_offset_data(single);
    }
    for (const auto& k : keys) {
      const auto name = fe::lagged_column_name(k);
      const auto a = all.column(name), b = single.column(name);
      for (std::size_t r = 0; r < a.size(); ++r) CHECK(same(a[r], b[r]));
    }
  }

  TEST_CASE("future perturbations and other assets never leak") {
    std::mt19937_64 rng(8);
    const auto f = monthly_panel({"A", "B", "C", "D"}, 36, &rng);
    const std::vector<std::string> cols{"mv"};
    const auto base_frame = fe::join_with_offset(f, Lag::months(3), cols);
    const auto base = base_frame.column("mv_lag_3mo");
    std::uniform_int_distribution<std::size_t> pick_row(0, f.rows() - 1);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t target = pick_row(rng);
      const fe::Date cutoff = fe::shift_back(f.date(target), Lag::months(3));
      std::vector<double> mv(f.column("mv").begin(), f.column("mv").end());
      for (std::size_t r = 0; r < f.rows(); ++r) {
        // Perturb the same asset after the cutoff, and every other asset.
        if (f.asset_of_row(r) != f.asset_of_row(target) || f.date(r) > cutoff) mv[r] = r % 3 ? -mv[r] : null_value;
      }
      const auto joined = fe::join_with_offset(f.with_column("mv", mv), Lag::months(3), cols);
      const auto lagged = joined.column("mv_lag_3mo");
      CHECK(same(lagged[target], base[target]));
    }
  }

  TEST_CASE("small random panels against the brute-force oracle") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
      fe::Table t;
      std::vector<double> mv;
      for (int a = 0; a < 4; ++a) {
        long d = oracle::days_from_civil(2019, 12, 1);
        for (int i = 0; i < 40; ++i) {
          d += 1 + static_cast<long>(u(rng) * 40);
          if (u(rng) < 0.2) continue;
          t.ids.push_back(asset_name(static_cast<std::size_t>(a)));
          t.dates.push_back(day(d));
          mv.push_back(u(rng) < 0.2 ? null_value : u(rng));
        }
      }
      t.columns.push_back({"mv", std::move(mv)});
      const auto f = fe::PanelFrame::from_table(std::move(t));
      const oracle::Offset lag{1 + trial % 5, trial % 2 ? 'm' : 'd'};
      const fe::OffsetKey key{"mv", lag.unit == 'm' ? Lag::months(lag.count) : Lag::days(lag.count)};
      const auto joined = fe::join_with_offset(f, key.lag, std::vector<fe::OffsetKey>{key});
      const auto got = joined.column(fe::lagged_column_name(key));
      const auto want = oracle::asof_bruteforce(f, "mv", lag, std::nullopt);
      for (std::size_t r = 0; r < want.size(); ++r) CHECK(same(got[r], want[r]));
    }
  }
}
