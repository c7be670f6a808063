#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "fe/registry.hpp"

namespace fe {

// The eleven anomaly signals, in registration order.
inline constexpr std::array<std::string_view, 11> kMispricingFactors = {
    "net_stock_issues", "composite_equity_issues", "accruals", "net_operating_assets",
    "asset_growth",     "investment_to_assets",    "distress", "o_score",
    "momentum",         "gross_profitability",     "roa"};

// Auxiliary-input names used by the advanced factors.
inline constexpr std::string_view kIndexTable = "sp500";
inline constexpr std::string_view kOScoreSection = "oscore";
inline constexpr std::string_view kDistressSection = "distress";

// Ohlson O-score coefficients, term order fixed:
// size, tl/ta, wc/ta, cl/ca, tl>ta flag, ni/ta, ffo/tl, two-year-loss flag, ni change.
struct OScoreCoefficients {
  double intercept = 0;
  double size = 0;
  double tl_ta = 0;
  double wc_ta = 0;
  double cl_ca = 0;
  double neg_equity = 0;
  double ni_ta = 0;
  double ffo_tl = 0;
  double two_year_loss = 0;
  double ni_change = 0;

  // Ohlson (1980), model 1.
  static OScoreCoefficients ohlson_1980();
  // Throws ParameterError when a key is missing or non-finite.
  static OScoreCoefficients from_set(const CoefficientSet& set);
  CoefficientSet to_set() const;
};

struct OScoreTerms {
  double size = 0;           // ln(ta)
  double tl_ta = 0;
  double wc_ta = 0;          // (ca − cl) / ta
  double cl_ca = 0;
  double neg_equity = 0;     // 1 if tl > ta
  double ni_ta = 0;
  double ffo_tl = 0;
  double two_year_loss = 0;  // 1 if ni < 0 this year and last
  double ni_change = 0;      // (ni − ni_prev) / (|ni| + |ni_prev|)
};

OScoreTerms oscore_terms(double ta, double tl, double ca, double cl, double ni, double ffo, double ni_prev);
double oscore_value(const OScoreTerms& terms, const OScoreCoefficients& coef);

// Dynamic-logit failure-probability coefficients.
struct DistressCoefficients {
  double intercept = 0;
  double profitability = 0;   // NIMTAAVG
  double leverage = 0;        // TLMTA
  double excess_return = 0;   // EXRETAVG
  double volatility = 0;      // SIGMA
  double relative_size = 0;   // RSIZE
  double cash = 0;            // CASHMTA
  double market_to_book = 0;  // MB
  double price = 0;           // ln(min(price, price_cap))
  double price_cap = 15.0;

  // Campbell, Hilscher and Szilagyi (2008), 12-month-ahead specification.
  static DistressCoefficients campbell_hilscher_szilagyi();
  static DistressCoefficients from_set(const CoefficientSet& set);
  CoefficientSet to_set() const;
};

struct DistressCovariates {
  double profitability = 0;
  double leverage = 0;
  double excess_return = 0;
  double volatility = 0;
  double relative_size = 0;
  double cash = 0;
  double market_to_book = 0;
  double price = 0;
};

// 1 / (1 + exp(−(intercept + Σ βᵢ xᵢ))).
double distress_probability(const DistressCovariates& x, const DistressCoefficients& coef);

// Geometric decay used for the rolling averages: 2^(−1/3) per month.
double distress_decay();

// Registers all eleven factors. Parameters: composite_equity_issues.lag
// (months, default 12), momentum.lag (window start, default 12), roa.lag
// (default 3).
void register_mispricing_factors(FactorRegistry& registry);

// Whether a high value of the factor is expected to predict high returns;
// nullopt for names outside the mispricing set.
std::optional<bool> higher_is_better(std::string_view factor);

// Adds ffo = ni + dp when the frame has no ffo column.
PanelFrame with_ffo_proxy(const PanelFrame& frame);

// Extras holding the shipped default coefficients for both sections.
Extras default_coefficient_extras();

}  // namespace fe
