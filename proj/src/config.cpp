#include "fe/config.hpp"

#include <cmath>
#include <sstream>

#include <toml.hpp>

#include "fe/error.hpp"
#include "fe/io.hpp"
#include "fe/mispricing.hpp"

namespace fe {

namespace {

using nlohmann::json;

json to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json obj = json::object();
    for (const auto& [k, v] : *t) obj[std::string(k.str())] = to_json(v);
    return obj;
  }
  if (const auto* a = node.as_array()) {
    json arr = json::array();
    for (const auto& v : *a) arr.push_back(to_json(v));
    return arr;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream ss;
  node.visit([&](const auto& n) { ss << n; });
  return ss.str();
}

// `config[key]` or `config[section][key]`.
const json* section(const json& config, std::string_view name) {
  if (!config.is_object()) return nullptr;
  const auto it = config.find(std::string(name));
  if (it == config.end()) return nullptr;
  if (!it->is_object()) throw ParameterError("config section [" + std::string(name) + "] must be a table");
  return &*it;
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) throw ParameterError(std::string(what) + " must be a number");
  return v.get<double>();
}

std::string text(const json& v, std::string_view what) {
  if (!v.is_string()) throw ParameterError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

void merge_section(const json& config, std::string_view name, const Extras& defaults, Extras& extras) {
  const json* s = section(config, name);
  if (!s) return;
  auto& set = extras.coefficients[std::string(name)];
  set = defaults.coefficients.find(name)->second;
  for (const auto& [k, v] : s->items()) {
    if (!set.contains(k)) throw ParameterError("unknown coefficient " + std::string(name) + "." + k);
    set[k] = number(v, std::string(name) + "." + k);
  }
}

}  // namespace

json parse_toml(std::string_view text) {
  try {
    const toml::table table = toml::parse(text);
    return to_json(table);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(e.description()), e.source().begin.line);
  }
}

json load_config_file(const std::filesystem::path& path) {
  const std::string body = read_text_file(path);
  if (path.extension() == ".json") {
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError("invalid JSON in '" + path.string() + "': " + e.what());
    }
  }
  return parse_toml(body);
}

ColumnSchema schema_from_config(const json& config, std::span<const std::string> headers) {
  const json* s = section(config, "schema");
  const json& root = s ? *s : config;
  ColumnSchema schema;
  schema.id_col = root.contains("id_col") ? text(root["id_col"], "id_col") : "id";
  schema.date_col = root.contains("date_col") ? text(root["date_col"], "date_col") : "date";
  if (const json* cols = section(root, "columns")) {
    for (const auto& [canonical, source] : cols->items()) {
      if (!is_canonical_column(canonical)) throw SchemaError("'" + canonical + "' is not a canonical column");
      schema.mappings.push_back({text(source, "columns." + canonical), canonical});
    }
  } else {
    schema = ColumnSchema::identity(headers, schema.id_col, schema.date_col);
  }
  schema.validate();
  return schema;
}

void apply_coefficients(const json& config, Extras& extras) {
  const Extras defaults = default_coefficient_extras();
  merge_section(config, kOScoreSection, defaults, extras);
  merge_section(config, kDistressSection, defaults, extras);
}

std::map<std::string, ParamMap, std::less<>> params_from_config(const json& config) {
  std::map<std::string, ParamMap, std::less<>> out;
  const json* s = section(config, "params");
  if (!s) return out;
  for (const auto& [factor, table] : s->items()) {
    if (!table.is_object()) throw ParameterError("params." + factor + " must be a table");
    for (const auto& [k, v] : table.items()) out[factor][k] = number(v, "params." + factor + "." + k);
  }
  return out;
}

std::optional<Postprocess> postprocess_from_config(const json& config) {
  const json* s = section(config, "postprocess");
  if (!s) return std::nullopt;
  Postprocess p;
  if (s->contains("winsorize")) {
    const auto& w = (*s)["winsorize"];
    if (!w.is_array() || w.size() != 2) throw ParameterError("postprocess.winsorize must be [lower, upper]");
    p.winsorize = Winsorization{number(w[0], "winsorize lower"), number(w[1], "winsorize upper")};
  }
  if (s->contains("zscore")) {
    if (!(*s)["zscore"].is_boolean()) throw ParameterError("postprocess.zscore must be true or false");
    p.zscore = (*s)["zscore"].get<bool>();
  }
  return p;
}

std::optional<Lag> accounting_lag_from_config(const json& config) {
  const json* s = section(config, "compute");
  if (!s || !s->contains("accounting_lag")) return std::nullopt;
  return parse_lag(text((*s)["accounting_lag"], "compute.accounting_lag"));
}

Mode parse_mode(std::string_view t) {
  if (t == "long_only") return Mode::long_only;
  if (t == "long_short") return Mode::long_short;
  throw ParameterError("mode must be long_only or long_short, got '" + std::string(t) + "'");
}

Direction parse_direction(std::string_view t) {
  if (t == "higher_is_better") return Direction::higher_is_better;
  if (t == "lower_is_better") return Direction::lower_is_better;
  throw ParameterError("direction must be higher_is_better or lower_is_better, got '" + std::string(t) + "'");
}

Rebalance parse_rebalance(std::string_view t) {
  if (t == "daily") return Rebalance::daily;
  if (t == "monthly") return Rebalance::monthly;
  throw ParameterError("rebalance must be daily or monthly, got '" + std::string(t) + "'");
}

Selection parse_selection(double v) {
  if (!(v > 0.0)) throw ParameterError("selection must be positive");
  if (v < 1.0) return Selection::fraction(v);
  if (v != std::floor(v)) throw ParameterError("selection of 1 or more must be a whole count");
  return Selection::count(static_cast<std::size_t>(v));
}

StrategyConfig StrategySettings::for_factor(const std::string& factor) const {
  StrategyConfig c = base;
  c.factor = factor;
  if (const auto it = directions.find(factor); it != directions.end()) {
    c.direction = it->second;
  } else if (const auto pref = higher_is_better(factor)) {
    c.direction = *pref ? Direction::higher_is_better : Direction::lower_is_better;
  } else {
    c.direction = Direction::higher_is_better;
  }
  return c;
}

StrategySettings strategy_from_config(const json& config) {
  StrategySettings s;
  const json* t = section(config, "strategy");
  if (!t) return s;
  auto& b = s.base;
  for (const auto& [k, v] : t->items()) {
    if (k == "mode") {
      b.mode = parse_mode(text(v, "strategy.mode"));
    } else if (k == "selection") {
      b.selection = parse_selection(number(v, "strategy.selection"));
    } else if (k == "fee_bps") {
      b.fee_bps = number(v, "strategy.fee_bps");
    } else if (k == "risk_free_rate") {
      b.risk_free_rate = number(v, "strategy.risk_free_rate");
    } else if (k == "initial_capital") {
      b.initial_capital = number(v, "strategy.initial_capital");
    } else if (k == "rebalance") {
      b.rebalance = parse_rebalance(text(v, "strategy.rebalance"));
    } else if (k == "periods_per_year") {
      b.periods_per_year = number(v, "strategy.periods_per_year");
    } else if (k == "direction") {
      if (!v.is_object()) throw ParameterError("strategy.direction must be a table");
      for (const auto& [f, d] : v.items()) s.directions[f] = parse_direction(text(d, "strategy.direction." + f));
    } else {
      throw ParameterError("unknown strategy setting '" + k + "'");
    }
  }
  b.validate();
  return s;
}

}  // namespace fe
