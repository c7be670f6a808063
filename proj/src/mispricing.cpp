#include "fe/mispricing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fe/error.hpp"

namespace fe {

namespace {

// Zero or negative denominators give null.
double ratio(double num, double den) {
  if (is_null(num) || is_null(den) || den <= 0.0) return null_value;
  return num / den;
}

double log_positive(double x) { return x > 0.0 ? std::log(x) : null_value; }

double log_gross_return(double r) { return r > -1.0 ? std::log1p(r) : null_value; }

constexpr Lag kOneMonth = Lag::months(1);

double coefficient(const CoefficientSet& set, std::string_view section, std::string_view key) {
  const auto it = set.find(key);
  if (it == set.end()) {
    throw ParameterError("coefficient section [" + std::string(section) + "] is missing '" + std::string(key) + "'");
  }
  if (!std::isfinite(it->second)) {
    throw ParameterError("coefficient " + std::string(section) + "." + std::string(key) + " is not finite");
  }
  return it->second;
}

// Value of a date-indexed series as of `target`, accepting only dates after
// target − staleness.
double series_asof(const std::vector<Date>& dates, const std::vector<double>& values, Date target, Lag staleness) {
  const auto it = std::upper_bound(dates.begin(), dates.end(), target);
  if (it == dates.begin()) return null_value;
  const auto i = static_cast<std::size_t>(it - dates.begin()) - 1;
  if (dates[i] <= shift_back(target, staleness)) return null_value;
  return values[i];
}

Table keyed_table(const PanelFrame& frame, std::vector<double> values) {
  Table t;
  t.ids.reserve(frame.rows());
  for (std::size_t r = 0; r < frame.rows(); ++r) t.ids.push_back(frame.id(r));
  t.dates.assign(frame.dates().begin(), frame.dates().end());
  t.columns.push_back({"value", std::move(values)});
  return t;
}

void register_net_stock_issues(FactorRegistry& reg) {
  reg.add_simple({.name = "net_stock_issues",
                  .required_columns = {"shares"},
                  .description = "ln(shares_t / shares_{t-12mo}), split-adjusted"},
                 [](FactorContext& ctx) -> RowExpr {
                   const auto now = ctx.col("shares");
                   const auto prev = ctx.col("shares", Lag::months(12));
                   return [=](const Row& r) { return log_positive(ratio(r[now], r[prev])); };
                 });
}

void register_composite_equity_issues(FactorRegistry& reg) {
  reg.add_simple({.name = "composite_equity_issues",
                  .required_columns = {"mv", "ret"},
                  .params = {{"lag", 12}},
                  .description = "log market-equity growth minus cumulative log return over the window"},
                 [](FactorContext& ctx) -> RowExpr {
                   const int lag = ctx.param_int("lag");
                   if (lag < 1) throw ParameterError("composite_equity_issues.lag must be at least 1");
                   const auto mv = ctx.col("mv");
                   const auto mv_prev = ctx.col("mv", Lag::months(lag));
                   std::vector<ColumnRef> rets;
                   for (int j = 0; j < lag; ++j) rets.push_back(ctx.col("ret", Lag::months(j), kOneMonth));
                   return [=](const Row& r) {
                     double cum = 0.0;
                     for (const auto ref : rets) cum += log_gross_return(r[ref]);
                     return log_positive(ratio(r[mv], r[mv_prev])) - cum;
                   };
                 });
}

void register_accruals(FactorRegistry& reg) {
  reg.add_simple(
      {.name = "accruals",
       .required_columns = {"ca", "cash", "cl", "std", "txp", "dp", "ta"},
       .description = "[(dCA - dCash) - (dCL - dSTD - dTXP) - DP] / average total assets"},
      [](FactorContext& ctx) -> RowExpr {
        struct Pair {
          ColumnRef now, prev;
        };
        auto both = [&](std::string_view c) { return Pair{ctx.col(c), ctx.col(c, Lag::months(12))}; };
        const Pair ca = both("ca"), cash = both("cash"), cl = both("cl"), std_ = both("std"), txp = both("txp"),
                   ta = both("ta");
        const auto dp = ctx.col("dp");
        return [=](const Row& r) {
          auto delta = [&](Pair p) { return r[p.now] - r[p.prev]; };
          const double num = (delta(ca) - delta(cash)) - (delta(cl) - delta(std_) - delta(txp)) - r[dp];
          return ratio(num, (r[ta.now] + r[ta.prev]) / 2.0);
        };
      });
}

void register_net_operating_assets(FactorRegistry& reg) {
  reg.add_simple({.name = "net_operating_assets",
                  .required_columns = {"ta", "cash", "std", "ltd", "ceq"},
                  .description = "[(TA - cash) - (TA - STD - LTD - CEQ)] / lagged TA"},
                 [](FactorContext& ctx) -> RowExpr {
                   const auto ta = ctx.col("ta");
                   const auto cash = ctx.col("cash");
                   const auto std_ = ctx.col("std");
                   const auto ltd = ctx.col("ltd");
                   const auto ceq = ctx.col("ceq");
                   const auto ta_prev = ctx.col("ta", Lag::months(12));
                   return [=](const Row& r) {
                     const double operating_assets = r[ta] - r[cash];
                     const double operating_liabilities = r[ta] - r[std_] - r[ltd] - r[ceq];
                     return ratio(operating_assets - operating_liabilities, r[ta_prev]);
                   };
                 });
}

void register_asset_growth(FactorRegistry& reg) {
  reg.add_simple({.name = "asset_growth", .required_columns = {"ta"}, .description = "TA / lagged TA - 1"},
                 [](FactorContext& ctx) -> RowExpr {
                   const auto ta = ctx.col("ta");
                   const auto ta_prev = ctx.col("ta", Lag::months(12));
                   return [=](const Row& r) { return ratio(r[ta], r[ta_prev]) - 1.0; };
                 });
}

void register_investment_to_assets(FactorRegistry& reg) {
  reg.add_simple({.name = "investment_to_assets",
                  .required_columns = {"ppegt", "invt", "ta"},
                  .description = "(dPPEGT + dINVT) / lagged TA"},
                 [](FactorContext& ctx) -> RowExpr {
                   const auto ppe = ctx.col("ppegt");
                   const auto ppe_prev = ctx.col("ppegt", Lag::months(12));
                   const auto inv = ctx.col("invt");
                   const auto inv_prev = ctx.col("invt", Lag::months(12));
                   const auto ta_prev = ctx.col("ta", Lag::months(12));
                   return [=](const Row& r) {
                     return ratio((r[ppe] - r[ppe_prev]) + (r[inv] - r[inv_prev]), r[ta_prev]);
                   };
                 });
}

void register_momentum(FactorRegistry& reg) {
  reg.add_simple({.name = "momentum",
                  .required_columns = {"ret"},
                  .params = {{"lag", 12}},
                  .description = "compounded return over months t-lag through t-2"},
                 [](FactorContext& ctx) -> RowExpr {
                   const int lag = ctx.param_int("lag");
                   if (lag < 2) throw ParameterError("momentum.lag must be at least 2");
                   std::vector<ColumnRef> rets;
                   for (int j = 2; j <= lag; ++j) rets.push_back(ctx.col("ret", Lag::months(j), kOneMonth));
                   return [=](const Row& r) {
                     double growth = 1.0;
                     for (const auto ref : rets) growth *= 1.0 + r[ref];
                     return growth - 1.0;
                   };
                 });
}

void register_gross_profitability(FactorRegistry& reg) {
  reg.add_simple({.name = "gross_profitability", .required_columns = {"gp", "ta"}, .description = "GP / TA"},
                 [](FactorContext& ctx) -> RowExpr {
                   const auto gp = ctx.col("gp");
                   const auto ta = ctx.col("ta");
                   return [=](const Row& r) { return ratio(r[gp], r[ta]); };
                 });
}

void register_roa(FactorRegistry& reg) {
  reg.add_simple({.name = "roa",
                  .required_columns = {"ibq", "ta"},
                  .params = {{"lag", 3}},
                  .description = "quarterly income before extraordinary items / lagged TA"},
                 [](FactorContext& ctx) -> RowExpr {
                   const int lag = ctx.param_int("lag");
                   if (lag < 0) throw ParameterError("roa.lag must not be negative");
                   const auto ibq = ctx.col("ibq");
                   const auto ta = ctx.col("ta", Lag::months(lag));
                   return [=](const Row& r) { return ratio(r[ibq], r[ta]); };
                 });
}

void register_o_score(FactorRegistry& reg) {
  reg.add_advanced(
      {.name = "o_score",
       .required_columns = {"ta", "tl", "ca", "cl", "ni", "ffo"},
       .required_extras = {std::string(kOScoreSection)},
       .description = "Ohlson O-score linear predictor"},
      [](FactorContext& ctx) -> AdvancedEval {
        const auto ta = ctx.col("ta");
        const auto tl = ctx.col("tl");
        const auto ca = ctx.col("ca");
        const auto cl = ctx.col("cl");
        const auto ni = ctx.col("ni");
        const auto ffo = ctx.col("ffo");
        const auto ni_prev = ctx.col("ni", Lag::months(12));
        ctx.note("size term is ln(total assets) without a price-level deflator");
        return [=](const AdvancedInput& in) {
          const auto coef = OScoreCoefficients::from_set(in.extras.coefficients.find(kOScoreSection)->second);
          std::vector<double> values(in.frame.rows());
          for (std::size_t r = 0; r < values.size(); ++r) {
            const auto terms =
                oscore_terms(in[ta][r], in[tl][r], in[ca][r], in[cl][r], in[ni][r], in[ffo][r], in[ni_prev][r]);
            values[r] = oscore_value(terms, coef);
          }
          return keyed_table(in.frame, std::move(values));
        };
      });
}

void register_distress(FactorRegistry& reg) {
  reg.add_advanced(
      {.name = "distress",
       .required_columns = {"mv", "ret", "price", "ni", "ta", "tl", "cash"},
       .required_extras = {std::string(kIndexTable), std::string(kDistressSection)},
       .description = "dynamic-logit failure probability"},
      [](FactorContext& ctx) -> AdvancedEval {
        struct Quarter {
          ColumnRef ni, mv, tl;
        };
        std::vector<Quarter> quarters;
        for (int q = 0; q < 4; ++q) {
          const Lag lag = Lag::months(3 * q);
          quarters.push_back({ctx.col("ni", lag), ctx.col("mv", lag, kOneMonth), ctx.col("tl", lag)});
        }
        std::vector<ColumnRef> rets;
        for (int j = 0; j < 12; ++j) rets.push_back(ctx.col("ret", Lag::months(j), kOneMonth));
        const auto mv = ctx.col("mv");
        const auto tl = ctx.col("tl");
        const auto ta = ctx.col("ta");
        const auto cash = ctx.col("cash");
        const auto price = ctx.col("price");
        ctx.note("volatility covariate approximated as annualized 3-month standard deviation of monthly returns");

        return [=](const AdvancedInput& in) {
          const auto coef = DistressCoefficients::from_set(in.extras.coefficients.find(kDistressSection)->second);
          const SeriesTable& index = in.extras.tables.find(kIndexTable)->second;
          if (!index.has_column("mv")) throw ParameterError("index table must have an 'mv' column");
          std::vector<double> index_ret;
          if (index.has_column("ret")) {
            index_ret = index.columns.find("ret")->second;
          } else if (index.has_column("level")) {
            const auto& level = index.columns.find("level")->second;
            index_ret.assign(level.size(), null_value);
            for (std::size_t i = 1; i < level.size(); ++i) index_ret[i] = ratio(level[i], level[i - 1]) - 1.0;
          } else {
            throw ParameterError("index table must have a 'ret' or 'level' column");
          }
          const auto& index_mv = index.columns.find("mv")->second;

          const double phi = distress_decay();
          const double phi3 = phi * phi * phi;
          const double ret_norm = (1.0 - phi) / (1.0 - std::pow(phi, 12));
          const double quarter_norm = (1.0 - phi3) / (1.0 - std::pow(phi, 12));

          std::vector<double> values(in.frame.rows());
          for (std::size_t r = 0; r < values.size(); ++r) {
            const Date t = in.frame.date(r);
            DistressCovariates x;

            double nimta = 0.0;
            for (int q = 0; q < 4; ++q) {
              const auto& qc = quarters[static_cast<std::size_t>(q)];
              nimta += std::pow(phi3, q) * ratio(in[qc.ni][r], in[qc.mv][r] + in[qc.tl][r]);
            }
            x.profitability = quarter_norm * nimta;

            double exret = 0.0;
            for (int j = 0; j < 12; ++j) {
              const double market = series_asof(index.dates, index_ret, shift_back(t, Lag::months(j)), kOneMonth);
              exret += std::pow(phi, j) * (log_gross_return(in[rets[static_cast<std::size_t>(j)]][r]) -
                                           log_gross_return(market));
            }
            x.excess_return = ret_norm * exret;

            const double r0 = in[rets[0]][r], r1 = in[rets[1]][r], r2 = in[rets[2]][r];
            const double mean3 = (r0 + r1 + r2) / 3.0;
            const double var3 = ((r0 - mean3) * (r0 - mean3) + (r1 - mean3) * (r1 - mean3) +
                                 (r2 - mean3) * (r2 - mean3)) / 2.0;
            x.volatility = std::sqrt(12.0 * var3);

            const double total_mv = series_asof(index.dates, index_mv, t, kOneMonth);
            x.relative_size = log_positive(ratio(in[mv][r], total_mv));
            const double market_assets = in[mv][r] + in[tl][r];
            x.leverage = ratio(in[tl][r], market_assets);
            x.cash = ratio(in[cash][r], market_assets);
            x.market_to_book = ratio(in[mv][r], in[ta][r] - in[tl][r]);
            const double p = in[price][r];
            x.price = log_positive(std::min(p, coef.price_cap));
            if (is_null(p)) x.price = null_value;

            values[r] = distress_probability(x, coef);
          }
          return keyed_table(in.frame, std::move(values));
        };
      });
}

}  // namespace

OScoreCoefficients OScoreCoefficients::ohlson_1980() {
  return {.intercept = -1.32,
          .size = -0.407,
          .tl_ta = 6.03,
          .wc_ta = -1.43,
          .cl_ca = 0.0757,
          .neg_equity = -1.72,
          .ni_ta = -2.37,
          .ffo_tl = -1.83,
          .two_year_loss = 0.285,
          .ni_change = -0.521};
}

OScoreCoefficients OScoreCoefficients::from_set(const CoefficientSet& set) {
  const std::string_view s = kOScoreSection;
  return {.intercept = coefficient(set, s, "intercept"),
          .size = coefficient(set, s, "size"),
          .tl_ta = coefficient(set, s, "tl_ta"),
          .wc_ta = coefficient(set, s, "wc_ta"),
          .cl_ca = coefficient(set, s, "cl_ca"),
          .neg_equity = coefficient(set, s, "neg_equity"),
          .ni_ta = coefficient(set, s, "ni_ta"),
          .ffo_tl = coefficient(set, s, "ffo_tl"),
          .two_year_loss = coefficient(set, s, "two_year_loss"),
          .ni_change = coefficient(set, s, "ni_change")};
}

CoefficientSet OScoreCoefficients::to_set() const {
  return {{"intercept", intercept}, {"size", size},     {"tl_ta", tl_ta},         {"wc_ta", wc_ta},
          {"cl_ca", cl_ca},         {"neg_equity", neg_equity}, {"ni_ta", ni_ta}, {"ffo_tl", ffo_tl},
          {"two_year_loss", two_year_loss}, {"ni_change", ni_change}};
}

OScoreTerms oscore_terms(double ta, double tl, double ca, double cl, double ni, double ffo, double ni_prev) {
  OScoreTerms t;
  t.size = log_positive(ta);
  t.tl_ta = ratio(tl, ta);
  t.wc_ta = ratio(ca - cl, ta);
  t.cl_ca = ratio(cl, ca);
  t.neg_equity = (is_null(tl) || is_null(ta)) ? null_value : (tl > ta ? 1.0 : 0.0);
  t.ni_ta = ratio(ni, ta);
  t.ffo_tl = ratio(ffo, tl);
  t.two_year_loss = (is_null(ni) || is_null(ni_prev)) ? null_value : (ni < 0 && ni_prev < 0 ? 1.0 : 0.0);
  t.ni_change = ratio(ni - ni_prev, std::abs(ni) + std::abs(ni_prev));
  return t;
}

double oscore_value(const OScoreTerms& t, const OScoreCoefficients& c) {
  return c.intercept + c.size * t.size + c.tl_ta * t.tl_ta + c.wc_ta * t.wc_ta + c.cl_ca * t.cl_ca +
         c.neg_equity * t.neg_equity + c.ni_ta * t.ni_ta + c.ffo_tl * t.ffo_tl + c.two_year_loss * t.two_year_loss +
         c.ni_change * t.ni_change;
}

DistressCoefficients DistressCoefficients::campbell_hilscher_szilagyi() {
  return {.intercept = -9.164,
          .profitability = -20.264,
          .leverage = 1.416,
          .excess_return = -7.129,
          .volatility = 1.411,
          .relative_size = -0.045,
          .cash = -2.132,
          .market_to_book = 0.075,
          .price = -0.058,
          .price_cap = 15.0};
}

DistressCoefficients DistressCoefficients::from_set(const CoefficientSet& set) {
  const std::string_view s = kDistressSection;
  DistressCoefficients c{.intercept = coefficient(set, s, "intercept"),
                         .profitability = coefficient(set, s, "profitability"),
                         .leverage = coefficient(set, s, "leverage"),
                         .excess_return = coefficient(set, s, "excess_return"),
                         .volatility = coefficient(set, s, "volatility"),
                         .relative_size = coefficient(set, s, "relative_size"),
                         .cash = coefficient(set, s, "cash"),
                         .market_to_book = coefficient(set, s, "market_to_book"),
                         .price = coefficient(set, s, "price")};
  if (set.contains("price_cap")) c.price_cap = coefficient(set, s, "price_cap");
  if (!(c.price_cap > 0)) throw ParameterError("distress.price_cap must be positive");
  return c;
}

CoefficientSet DistressCoefficients::to_set() const {
  return {{"intercept", intercept},
          {"profitability", profitability},
          {"leverage", leverage},
          {"excess_return", excess_return},
          {"volatility", volatility},
          {"relative_size", relative_size},
          {"cash", cash},
          {"market_to_book", market_to_book},
          {"price", price},
          {"price_cap", price_cap}};
}

double distress_probability(const DistressCovariates& x, const DistressCoefficients& c) {
  const double linear = c.intercept + c.profitability * x.profitability + c.leverage * x.leverage +
                        c.excess_return * x.excess_return + c.volatility * x.volatility +
                        c.relative_size * x.relative_size + c.cash * x.cash + c.market_to_book * x.market_to_book +
                        c.price * x.price;
  return 1.0 / (1.0 + std::exp(-linear));
}

double distress_decay() { return std::pow(2.0, -1.0 / 3.0); }

void register_mispricing_factors(FactorRegistry& registry) {
  register_net_stock_issues(registry);
  register_composite_equity_issues(registry);
  register_accruals(registry);
  register_net_operating_assets(registry);
  register_asset_growth(registry);
  register_investment_to_assets(registry);
  register_distress(registry);
  register_o_score(registry);
  register_momentum(registry);
  register_gross_profitability(registry);
  register_roa(registry);
}

std::optional<bool> higher_is_better(std::string_view factor) {
  if (factor == "momentum" || factor == "gross_profitability" || factor == "roa") return true;
  if (std::find(kMispricingFactors.begin(), kMispricingFactors.end(), factor) != kMispricingFactors.end()) {
    return false;
  }
  return std::nullopt;
}

PanelFrame with_ffo_proxy(const PanelFrame& frame) {
  if (frame.has_column("ffo")) return frame;
  const auto ni = frame.column("ni");
  const auto dp = frame.column("dp");
  std::vector<double> ffo(frame.rows());
  for (std::size_t r = 0; r < ffo.size(); ++r) ffo[r] = ni[r] + dp[r];
  return frame.with_column("ffo", std::move(ffo));
}

Extras default_coefficient_extras() {
  Extras e;
  e.coefficients.emplace(std::string(kOScoreSection), OScoreCoefficients::ohlson_1980().to_set());
  e.coefficients.emplace(std::string(kDistressSection), DistressCoefficients::campbell_hilscher_szilagyi().to_set());
  return e;
}

}  // namespace fe
