#include <doctest.h>

#include <cmath>
#include <variant>

#include "common.hpp"
#include "fe/diagnostics.hpp"
#include "fe/error.hpp"
#include "fe/preprocess.hpp"
#include "fe/registry.hpp"

using namespace testing_support;
using fe::Lag;
using fe::null_value;

namespace {

fe::PanelFrame roa_frame() {
  // Two assets, four month-ends; ta three months before the last row is 100.
  fe::Table t;
  std::vector<double> ibq, ta;
  for (const char* id : {"A", "B"}) {
    fe::Date d = fe::make_date(2020, 1, 31);
    for (int i = 0; i < 4; ++i) {
      t.ids.push_back(id);
      t.dates.push_back(d);
      ibq.push_back(10);
      ta.push_back(id[0] == 'A' ? 100.0 : (i == 0 ? null_value : 50.0));
      d = fe::last_day_of_month(d + std::chrono::days{1});
    }
  }
  t.columns.push_back({"ibq", std::move(ibq)});
  t.columns.push_back({"ta", std::move(ta)});
  return fe::PanelFrame::from_table(std::move(t));
}

fe::RowExpr roa_body(fe::FactorContext& ctx) {
  const auto ibq = ctx.col("ibq");
  const auto ta = ctx.col("ta", Lag::months(ctx.param_int("lag")));
  return [=](const fe::Row& r) { return r[ta] > 0 ? r[ibq] / r[ta] : null_value; };
}

fe::FactorDef roa_def() { return {.name = "roa", .required_columns = {"ibq", "ta"}, .params = {{"lag", 3}}}; }

fe::ComputeOptions no_accounting_lag() { return {.accounting_lag = Lag::months(0)}; }

const fe::FactorRegistry& mispricing() {
  static fe::FactorRegistry reg;
  static bool once = (fe::register_mispricing_factors(reg), true);
  (void)once;
  return reg;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

struct QuietDiag {
  std::vector<std::string> messages;
  fe::diag::Sink previous;
  QuietDiag() { previous = fe::diag::set_sink([this](std::string_view m) { messages.emplace_back(m); }); }
  ~QuietDiag() { fe::diag::set_sink(previous); }
};

}  // namespace

TEST_SUITE("factor_registry") {
  TEST_CASE("registration, lookup and order") {
    fe::FactorRegistry reg;
    reg.add_simple(roa_def(), roa_body);
    CHECK(reg.find("roa") != nullptr);
    CHECK_THROWS_AS(reg.add_simple(roa_def(), roa_body), fe::RegistrationError);
    CHECK_THROWS_AS(reg.at("nope"), fe::LookupError);

    fe::FactorRegistry abc;
    for (const char* n : {"a", "b", "c"}) abc.add_simple({.name = n, .required_columns = {"ta"}}, roa_body);
    CHECK(abc.names() == std::vector<std::string>{"a", "b", "c"});

    CHECK_THROWS_AS(reg.add_simple({.name = "bad", .required_columns = {"WC02999"}}, roa_body), fe::RegistrationError);
    CHECK_THROWS_AS(reg.add({.name = "kind", .kind = fe::FactorKind::advanced, .required_columns = {"ta"}},
                            fe::SimpleBody(roa_body)),
                    fe::RegistrationError);
  }

  TEST_CASE("requirement checks") {
    const auto f = roa_frame();
    const fe::FactorDef both{.name = "x", .required_columns = {"ibq", "ta"}};
    auto r = fe::check_requirements(both, f);
    CHECK(r.satisfied);
    CHECK(r.missing.empty());

    r = fe::check_requirements(both, f.without_column("ibq"));
    CHECK_FALSE(r.satisfied);
    CHECK(r.missing == std::vector<std::string>{"ibq"});

    r = fe::check_requirements(fe::FactorDef{.name = "none"}, f);
    CHECK(r.satisfied);

    const fe::FactorDef needs_extra{.name = "e", .required_extras = {"sp500"}};
    r = fe::check_requirements(needs_extra, f, fe::Extras{});
    CHECK(r.missing == std::vector<std::string>{"sp500"});
  }

  TEST_CASE("simple run: value, null propagation, zscore on a constant") {
    const auto f = roa_frame();
    const auto res = fe::run_simple(roa_def(), roa_body, f, {}, no_accounting_lag());
    REQUIRE(res.rows() == f.rows());
    CHECK(res.frame().column_names() == std::vector<std::string>{"value"});
    CHECK(res.values()[3] == 0.1);
    CHECK(fe::is_null(res.values()[0]));  // no history
    CHECK(fe::is_null(res.values()[7]));  // B's ta three months back is null

    auto def = roa_def();
    def.postprocess.zscore = true;
    const auto z = fe::run_simple(def, roa_body, f.with_column("ta", std::vector<double>(f.rows(), 100.0)), {},
                                  no_accounting_lag());
    for (double v : z.values()) CHECK(fe::is_null(v));
  }

  TEST_CASE("undeclared columns and unknown parameters") {
    const auto f = roa_frame();
    const fe::SimpleBody sneaky = [](fe::FactorContext& ctx) -> fe::RowExpr {
      const auto mv = ctx.col("mv");
      return [=](const fe::Row& r) { return r[mv]; };
    };
    try {
      fe::run_simple({.name = "sneaky", .required_columns = {"ta"}}, sneaky, f);
      FAIL("expected a definition error");
    } catch (const fe::DefinitionError& e) {
      CHECK(std::string(e.what()).find("mv") != std::string::npos);
    }
    CHECK_THROWS_AS(fe::run_simple(roa_def(), roa_body, f, {{"window", 2}}), fe::ParameterError);
    const auto overridden = fe::run_simple(roa_def(), roa_body, f, {{"lag", 1}}, no_accounting_lag());
    CHECK(overridden.values()[1] == 0.1);
  }

  TEST_CASE("advanced contract") {
    const auto f = roa_frame();
    const fe::FactorDef def{.name = "adv", .kind = fe::FactorKind::advanced, .required_columns = {"ta"}};

    const fe::AdvancedBody zeros = [](fe::FactorContext& ctx) -> fe::AdvancedEval {
      ctx.col("ta");
      return [](const fe::AdvancedInput& in) {
        fe::Table t = in.frame.select(std::vector<std::string>{}).to_table();
        t.columns.push_back({"value", std::vector<double>(t.rows(), 0.0)});
        return t;
      };
    };
    const auto ok = fe::run_advanced(def, zeros, f, {}, {});
    for (double v : ok.values()) CHECK(v == 0.0);

    const fe::AdvancedBody wide = [](fe::FactorContext&) -> fe::AdvancedEval {
      return [](const fe::AdvancedInput& in) {
        fe::Table t = in.frame.select(std::vector<std::string>{}).to_table();
        t.columns.push_back({"value", std::vector<double>(t.rows(), 0.0)});
        t.columns.push_back({"extra", std::vector<double>(t.rows(), 1.0)});
        return t;
      };
    };
    CHECK_THROWS_AS(fe::run_advanced(def, wide, f, {}, {}), fe::ContractViolation);

    const fe::AdvancedBody dupes = [](fe::FactorContext&) -> fe::AdvancedEval {
      return [](const fe::AdvancedInput&) {
        fe::Table t;
        t.ids = {"A", "A"};
        t.dates = {fe::make_date(2020, 1, 31), fe::make_date(2020, 1, 31)};
        t.columns.push_back({"value", {1, 2}});
        return t;
      };
    };
    CHECK_THROWS_AS(fe::run_advanced(def, dupes, f, {}, {}), fe::ContractViolation);

    const auto& distress = mispricing().at("distress");
    auto extras = fe::default_coefficient_extras();  // no index table
    const auto data = fe::generate_synthetic({.assets = 3, .months = 24});
    CHECK_THROWS_AS(fe::run_advanced(distress.def, std::get<fe::AdvancedBody>(distress.body), data.panel, {}, extras),
                    fe::ParameterError);
  }

  TEST_CASE("compute joins by name and skips unmet requirements") {
    QuietDiag quiet;
    const auto data = fe::generate_synthetic({.assets = 12, .months = 40, .seed = 3});
    fe::ComputeRequest one;
    one.factors = {"roa"};
    const auto a = fe::compute(mispricing(), data.panel, one);
    CHECK(a.frame.has_column("roa"));
    CHECK(a.frame.same_keys(data.panel));
    CHECK(a.frame.column_count() == data.panel.column_count() + 1);

    fe::ComputeRequest all;
    all.extras = extras_for(data);
    const auto b = fe::compute(mispricing(), data.panel.without_column("ibq"), all);
    CHECK_FALSE(b.frame.has_column("roa"));
    REQUIRE(b.warnings.size() == 1);
    CHECK(b.warnings[0].factor == "roa");
    CHECK(b.warnings[0].missing == std::vector<std::string>{"ibq"});
    CHECK(b.computed.size() == 10);
    bool logged = false;
    for (const auto& m : quiet.messages) logged |= m.find("ibq") != std::string::npos;
    CHECK(logged);

    fe::ComputeRequest bogus;
    bogus.factors = {"bogus"};
    CHECK_THROWS_AS(fe::compute(mispricing(), data.panel, bogus), fe::LookupError);
  }

  TEST_CASE("order independence, purity and per-factor equivalence") {
    const auto data = fe::generate_synthetic({.assets = 15, .months = 36, .seed = 9});
    const auto extras = extras_for(data);
    fe::ComputeRequest ab, ba;
    ab.factors = {"roa", "momentum"};
    ba.factors = {"momentum", "roa"};
    const auto x = fe::compute(mispricing(), data.panel, ab);
    const auto y = fe::compute(mispricing(), data.panel, ba);
    for (const char* f : {"roa", "momentum"}) {
      const auto p = x.frame.column(f), q = y.frame.column(f);
      for (std::size_t r = 0; r < p.size(); ++r) CHECK(same(p[r], q[r]));
    }

    const auto before = data.panel;
    const auto batch = compute_all(data.panel, extras);
    const auto again = compute_all(data.panel, extras);
    CHECK(fe::identical(batch.frame, again.frame));
    CHECK(fe::identical(before, data.panel));
    CHECK(batch.frame.rows() == data.panel.rows());

    for (const auto name : fe::kMispricingFactors) {
      fe::ComputeRequest single;
      single.factors = {std::string(name)};
      single.extras = extras;
      const auto s = fe::compute(mispricing(), data.panel, single);
      const auto p = s.frame.column(name), q = batch.frame.column(name);
      for (std::size_t r = 0; r < p.size(); ++r) CHECK(same(p[r], q[r]));
    }
  }

  TEST_CASE("postprocess override applies winsorize then zscore to outputs") {
    const auto data = fe::generate_synthetic({.assets = 30, .months = 30, .seed = 4});
    fe::ComputeRequest plain, post;
    plain.factors = post.factors = {"asset_growth"};
    post.postprocess_override = fe::Postprocess{fe::Winsorization{0.1, 0.9}, true};
    const auto a = fe::compute(mispricing(), data.panel, plain);
    const auto b = fe::compute(mispricing(), data.panel, post);
    const auto expect = fe::zscore_by_date(a.frame, fe::winsorize(a.frame, "asset_growth", 0.1, 0.9));
    const auto got = b.frame.column("asset_growth");
    for (std::size_t r = 0; r < got.size(); ++r) CHECK(same(got[r], expect[r]));
  }
}
