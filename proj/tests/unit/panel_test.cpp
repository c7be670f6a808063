#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "common.hpp"
#include "fe/error.hpp"
#include "fe/io.hpp"
#include "fe/preprocess.hpp"

using namespace testing_support;
using fe::null_value;

namespace {

fe::PanelFrame one_column(const std::vector<std::string>& ids, const std::vector<fe::Date>& dates,
                          std::vector<double> x, const std::string& name = "x") {
  fe::Table t;
  t.ids = ids;
  t.dates = dates;
  t.columns.push_back({name, std::move(x)});
  return fe::PanelFrame::from_table(std::move(t));
}

std::vector<fe::Date> month_ends(int n, fe::Date start = fe::make_date(2020, 1, 31)) {
  std::vector<fe::Date> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(start);
    start = fe::last_day_of_month(start + std::chrono::days{1});
  }
  return out;
}

bool sorted_unique(const fe::PanelFrame& f) {
  for (std::size_t r = 1; r < f.rows(); ++r) {
    if (std::make_pair(f.id(r - 1), f.date(r - 1)) >= std::make_pair(f.id(r), f.date(r))) return false;
  }
  return true;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

// Random panel with nulls and holes on a month-end grid.
fe::PanelFrame random_panel(std::mt19937_64& rng, int assets, int months) {
  std::uniform_real_distribution<double> u(0, 1);
  fe::Table t;
  std::vector<double> x;
  const auto grid = month_ends(months);
  for (int a = 0; a < assets; ++a) {
    for (const auto& d : grid) {
      if (u(rng) < 0.2) continue;
      t.ids.push_back(asset_name(static_cast<std::size_t>(a)));
      t.dates.push_back(d);
      x.push_back(u(rng) < 0.25 ? null_value : std::round(u(rng) * 200 - 100));
    }
  }
  // Shuffle the input order; ingestion must sort.
  std::vector<std::size_t> order(t.ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  fe::Table s;
  std::vector<double> sx;
  for (auto i : order) {
    s.ids.push_back(t.ids[i]);
    s.dates.push_back(t.dates[i]);
    sx.push_back(x[i]);
  }
  s.columns.push_back({"x", std::move(sx)});
  return fe::PanelFrame::from_table(std::move(s));
}

}  // namespace

TEST_SUITE("panel_core") {
  TEST_CASE("ingest renames mapped columns and keeps values") {
    const std::string csv = "ticker,dt,WC02999\nAAPL,2020-01-31,10.5\nAAPL,2020-02-29,11\nMSFT,2020-01-31,\n";
    const fe::ColumnSchema schema{"ticker", "dt", {{"WC02999", "ta"}}};
    const auto f = fe::ingest_csv(csv, schema);
    CHECK(f.column_names() == std::vector<std::string>{"ta"});
    REQUIRE(f.rows() == 3);
    CHECK(f.column("ta")[0] == 10.5);
    CHECK(f.column("ta")[1] == 11.0);
    CHECK(fe::is_null(f.column("ta")[2]));
    CHECK(f.date(1) == fe::make_date(2020, 2, 29));
  }

  TEST_CASE("ingest sorts rows by id then date") {
    const std::string csv = "id,date,ta\nB,2020-02-29,4\nA,2020-02-29,2\nB,2020-01-31,3\nA,2020-01-31,1\n";
    const auto f = fe::ingest_csv(csv, fe::ColumnSchema{"id", "date", {{"ta", "ta"}}});
    CHECK(sorted_unique(f));
    CHECK(std::vector<double>(f.column("ta").begin(), f.column("ta").end()) == std::vector<double>{1, 2, 3, 4});
  }

  TEST_CASE("ingest rejects duplicate keys") {
    const std::string csv = "id,date,ta\nAAPL,2020-01-31,1\nAAPL,2020-01-31,2\n";
    CHECK_THROWS_AS(fe::ingest_csv(csv, fe::ColumnSchema{"id", "date", {{"ta", "ta"}}}), fe::IntegrityError);
  }

  TEST_CASE("ingest errors name the column or line") {
    const std::string csv = "id,date,ta\nA,2020-01-31,1\nA,2020-02-30,2\n";
    try {
      fe::ingest_csv(csv, fe::ColumnSchema{"id", "date", {{"ta", "ta"}}});
      FAIL("expected a parse error");
    } catch (const fe::ParseError& e) {
      CHECK(e.line() == 3);
    }
    try {
      fe::ingest_csv(csv, fe::ColumnSchema{"id", "date", {{"WC02999", "ta"}}});
      FAIL("expected a schema error");
    } catch (const fe::SchemaError& e) {
      CHECK(std::string(e.what()).find("WC02999") != std::string::npos);
    }
    CHECK_THROWS_AS(fe::ingest_csv("id,date,ta\nA,2020-01-31,abc\n", fe::ColumnSchema{"id", "date", {{"ta", "ta"}}}),
                    fe::ParseError);
  }

  TEST_CASE("dates are strict ISO") {
    CHECK(fe::parse_date("2020-02-29").has_value());
    CHECK_FALSE(fe::parse_date("2021-02-29").has_value());
    CHECK_FALSE(fe::parse_date("2021-2-28").has_value());
    CHECK_FALSE(fe::parse_date("2021-02-28T00:00").has_value());
    CHECK(fe::format_date(fe::make_date(1999, 12, 31)) == "1999-12-31");
  }

  TEST_CASE("forward fill within an asset") {
    const auto d = month_ends(4);
    const auto f = one_column({"A", "A", "A", "A"}, d, {1, null_value, null_value, 4});
    const std::vector<std::string> cols{"x"};
    const auto g = fe::fill_missing(f, cols, fe::FillDirection::forward);
    CHECK(std::vector<double>(g.column("x").begin(), g.column("x").end()) == std::vector<double>{1, 1, 1, 4});
    CHECK(fe::is_null(f.column("x")[1]));  // input untouched
  }

  TEST_CASE("forward fill never crosses assets") {
    const auto d = month_ends(2);
    const auto f = one_column({"A", "A", "B", "B"}, {d[0], d[1], d[0], d[1]}, {3, 5, null_value, 7});
    const std::vector<std::string> cols{"x"};
    const auto g = fe::fill_missing(f, cols, fe::FillDirection::forward);
    CHECK(fe::is_null(g.column("x")[2]));
    CHECK(g.column("x")[3] == 7);
  }

  TEST_CASE("backward fill leaves trailing nulls") {
    const auto f = one_column({"A", "A", "A"}, month_ends(3), {null_value, 2, null_value});
    const std::vector<std::string> cols{"x"};
    const auto g = fe::fill_missing(f, cols, fe::FillDirection::backward);
    CHECK(g.column("x")[0] == 2);
    CHECK(g.column("x")[1] == 2);
    CHECK(fe::is_null(g.column("x")[2]));
  }

  TEST_CASE("fill on an unknown column is a schema error") {
    const auto f = one_column({"A"}, month_ends(1), {1});
    const std::vector<std::string> cols{"nope"};
    CHECK_THROWS_AS(fe::fill_missing(f, cols, fe::FillDirection::forward), fe::SchemaError);
  }

  TEST_CASE("monthly last takes the final day of the month") {
    std::vector<std::string> ids;
    std::vector<fe::Date> dates;
    std::vector<double> x;
    for (int d = 1; d <= 31; ++d) {
      ids.push_back("A");
      dates.push_back(fe::make_date(2020, 1, static_cast<unsigned>(d)));
      x.push_back(d * 1.5);
    }
    const auto m = fe::resample(one_column(ids, dates, x), fe::Frequency::monthly, fe::Aggregation::last);
    REQUIRE(m.rows() == 1);
    CHECK(m.date(0) == fe::make_date(2020, 1, 31));
    CHECK(m.column("x")[0] == 31 * 1.5);
  }

  TEST_CASE("monthly sum and quarterly mean") {
    const std::vector<fe::Date> jan{fe::make_date(2020, 1, 3), fe::make_date(2020, 1, 10), fe::make_date(2020, 1, 17)};
    const auto s = fe::resample(one_column({"A", "A", "A"}, jan, {1, 2, 3}), fe::Frequency::monthly,
                                fe::Aggregation::sum);
    CHECK(s.column("x")[0] == 6);

    const std::vector<fe::Date> q{fe::make_date(2020, 4, 30), fe::make_date(2020, 6, 30)};
    const auto m = fe::resample(one_column({"A", "A"}, q, {2, 4}), fe::Frequency::quarterly, fe::Aggregation::mean);
    REQUIRE(m.rows() == 1);
    CHECK(m.date(0) == fe::make_date(2020, 6, 30));
    CHECK(m.column("x")[0] == 3);
  }

  TEST_CASE("compound aggregation and period ends") {
    const std::vector<fe::Date> d{fe::make_date(2021, 3, 1), fe::make_date(2021, 3, 2)};
    const auto c = fe::resample(one_column({"A", "A"}, d, {0.1, 0.1}, "ret"), fe::Frequency::monthly,
                                fe::Aggregation::compound);
    CHECK(c.column("ret")[0] == doctest::Approx(0.21).epsilon(1e-15));
    CHECK(fe::period_end(fe::make_date(2020, 2, 3), fe::Frequency::monthly) == fe::make_date(2020, 2, 29));
    CHECK(fe::period_end(fe::make_date(2020, 8, 3), fe::Frequency::quarterly) == fe::make_date(2020, 9, 30));
    CHECK(fe::period_end(fe::make_date(2020, 8, 3), fe::Frequency::annual) == fe::make_date(2020, 12, 31));
    CHECK_THROWS_AS(fe::resample(fe::PanelFrame{}, fe::Frequency::monthly, fe::Aggregation::last),
                    fe::ParameterError);
  }

  TEST_CASE("winsorize examples") {
    const std::vector<double> x{5, -3, 9, null_value, 1};
    const auto same_out = fe::winsorize_cross_section(x, 0, 1);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(same(same_out[i], x[i]));

    const std::vector<double> flat{5, 5, 5, 5};
    CHECK(fe::winsorize_cross_section(flat, 0.1, 0.9) == flat);

    CHECK_THROWS_AS(fe::winsorize_cross_section(x, 0.5, 0.5), fe::ParameterError);
    CHECK_THROWS_AS(fe::winsorize_cross_section(x, 0.6, 0.4), fe::ParameterError);
  }

  TEST_CASE("winsorize 1..100 against a sort-and-index quantile") {
    std::vector<double> x;
    for (int i = 100; i >= 1; --i) x.push_back(i);
    // Nearest rank with exact rational arithmetic: k = ceil(num * n / den).
    auto rank_value = [&](long num, long den) {
      std::vector<double> s = x;
      std::sort(s.begin(), s.end());
      const long n = static_cast<long>(s.size());
      const long k = std::max(1L, (num * n + den - 1) / den);
      return s[static_cast<std::size_t>(k - 1)];
    };
    const double lo = rank_value(1, 100), hi = rank_value(99, 100);
    CHECK(lo == 1);
    CHECK(hi == 99);
    const auto w = fe::winsorize_cross_section(x, 0.01, 0.99);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(w[i] == std::clamp(x[i], lo, hi));
  }

  TEST_CASE("zscore examples") {
    const std::vector<double> sym{-1, 1};
    CHECK(fe::zscore_cross_section(sym) == sym);

    for (double v : fe::zscore_cross_section(std::vector<double>{3, 3, 3})) CHECK(fe::is_null(v));
    for (double v : fe::zscore_cross_section(std::vector<double>{3, null_value})) CHECK(fe::is_null(v));

    const auto z = fe::zscore_cross_section(std::vector<double>{1, 2, 3, 4});
    const double sd = std::sqrt(1.25);
    for (int i = 0; i < 4; ++i) CHECK(z[static_cast<std::size_t>(i)] == doctest::Approx((i + 1 - 2.5) / sd).epsilon(1e-15));
  }

  TEST_CASE("per-date helpers group by date") {
    const auto d = month_ends(2);
    const auto f = one_column({"A", "A", "B", "B"}, {d[0], d[1], d[0], d[1]}, {1, 10, 3, 10});
    const auto z = fe::zscore(f, "x");
    CHECK(z[0] == -1);
    CHECK(z[2] == 1);
    CHECK(fe::is_null(z[1]));
    CHECK(fe::is_null(z[3]));
  }

  TEST_CASE("properties on random panels") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      const auto f = random_panel(rng, 1 + trial % 9, 3 + trial % 30);
      CHECK(sorted_unique(f));
      const std::vector<std::string> cols{"x"};
      const auto fwd = fe::fill_missing(f, cols, fe::FillDirection::forward);
      CHECK(fwd.same_keys(f));
      CHECK(sorted_unique(fe::resample(f, fe::Frequency::quarterly, fe::Aggregation::mean)));

      // Fill isolation: rewriting asset 0 changes no other asset's filled values.
      if (f.asset_count() > 1) {
        std::vector<double> x(f.column("x").begin(), f.column("x").end());
        const auto [b, e] = f.asset_rows(0);
        for (auto r = b; r < e; ++r) x[r] = r % 2 ? null_value : -1000.0 - r;
        const auto fwd2 = fe::fill_missing(f.with_column("x", x), cols, fe::FillDirection::forward);
        for (auto r = e; r < f.rows(); ++r) CHECK(same(fwd.column("x")[r], fwd2.column("x")[r]));
      }

      // Winsorize idempotence and order preservation; zscore normalization.
      const auto w = fe::winsorize(f, "x", 0.1, 0.8);
      const auto ww = fe::winsorize_by_date(f, w, 0.1, 0.8);
      for (std::size_t r = 0; r < w.size(); ++r) CHECK(same(w[r], ww[r]));
      const auto z = fe::zscore(f, "x");
      for (const auto& group : fe::cross_sections(f)) {
        double s = 0, ss = 0;
        std::size_t n = 0;
        for (auto i : group) {
          for (auto j : group) {
            const double xi = f.column("x")[i], xj = f.column("x")[j];
            if (!fe::is_null(xi) && !fe::is_null(xj) && xi <= xj) CHECK(w[i] <= w[j]);
          }
          if (!fe::is_null(z[i])) {
            s += z[i];
            ss += z[i] * z[i];
            ++n;
          }
        }
        if (n >= 2) {
          CHECK(std::fabs(s / n) <= 1e-12);
          CHECK(std::fabs(std::sqrt(ss / n - (s / n) * (s / n)) - 1) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("binary panel round trip") {
    std::mt19937_64 rng(3);
    const auto f = random_panel(rng, 5, 20);
    const auto path = std::filesystem::temp_directory_path() / "fe_unit_roundtrip.fepanel";
    fe::write_panel_binary(path, f);
    CHECK(fe::is_panel_binary(path));
    CHECK(fe::identical(fe::read_panel_binary(path), f));
    std::filesystem::remove(path);
  }
}
