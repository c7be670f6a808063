#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fe/backtest.hpp"
#include "fe/panel.hpp"
#include "fe/registry.hpp"

namespace fe {

// Reads a TOML file (or JSON when the extension is .json) into a JSON
// object. Throws IoError or ParseError.
nlohmann::json load_config_file(const std::filesystem::path& path);
nlohmann::json parse_toml(std::string_view text);

// Schema keys, at top level or under [schema]:
//   id_col, date_col          (default "id", "date")
//   [columns] canonical = "source header"
// Without a columns table every header other than the keys is kept as-is.
ColumnSchema schema_from_config(const nlohmann::json& config, std::span<const std::string> headers);

// Loads the [oscore] and [distress] sections present in `config`. Keys not
// given fall back to the literature defaults; unknown keys throw
// ParameterError. An absent section adds nothing, so factors needing it are
// skipped.
void apply_coefficients(const nlohmann::json& config, Extras& extras);

// [params.<factor>] name = value
std::map<std::string, ParamMap, std::less<>> params_from_config(const nlohmann::json& config);

// [postprocess] winsorize = [lo, hi], zscore = bool
std::optional<Postprocess> postprocess_from_config(const nlohmann::json& config);

// [compute] accounting_lag = "3mo"
std::optional<Lag> accounting_lag_from_config(const nlohmann::json& config);

// [strategy]: mode, selection (fraction < 1 or integer count >= 1), fee_bps,
// risk_free_rate, initial_capital, rebalance, periods_per_year.
// [strategy.direction] factor = "higher_is_better" | "lower_is_better".
struct StrategySettings {
  StrategyConfig base;
  std::map<std::string, Direction, std::less<>> directions;

  // Base config for `factor` with its direction resolved: explicit setting,
  // then the factor's known preference, then higher_is_better.
  StrategyConfig for_factor(const std::string& factor) const;
};
StrategySettings strategy_from_config(const nlohmann::json& config);

Mode parse_mode(std::string_view text);
Direction parse_direction(std::string_view text);
Rebalance parse_rebalance(std::string_view text);
Selection parse_selection(double value);

}  // namespace fe
