#include "fe/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fe/backtest.hpp"
#include "fe/config.hpp"
#include "fe/diagnostics.hpp"
#include "fe/error.hpp"
#include "fe/factor_file.hpp"
#include "fe/io.hpp"
#include "fe/mispricing.hpp"
#include "fe/preprocess.hpp"
#include "fe/registry.hpp"
#include "fe/report.hpp"
#include "fe/synth.hpp"
#include "fe/validation.hpp"

namespace fe::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

json load_optional_config(const std::string& path) {
  return path.empty() ? json::object() : load_config_file(path);
}

// CSV through the schema (or identity), or the binary format.
PanelFrame load_panel(const std::string& input, const std::string& schema_path, const json& config) {
  const json schema_cfg = schema_path.empty() ? config : load_config_file(schema_path);
  if (!fs::exists(input)) throw IoError("input '" + input + "' does not exist");
  if (is_panel_binary(input)) return ingest_file(input, schema_from_config(schema_cfg, {}));
  const CsvDocument doc = read_csv_file(input);
  return ingest(doc, schema_from_config(schema_cfg, doc.header));
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ParameterError(std::string(flag) + " expects NAME=VALUE, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

Frequency parse_frequency(const std::string& f) {
  if (f == "daily") return Frequency::daily;
  if (f == "monthly") return Frequency::monthly;
  if (f == "quarterly") return Frequency::quarterly;
  if (f == "annual") return Frequency::annual;
  throw ParameterError("frequency must be daily, monthly, quarterly or annual");
}

FactorRegistry& default_registry() {
  static FactorRegistry registry;
  static std::once_flag once;
  std::call_once(once, [] { register_mispricing_factors(registry); });
  return registry;
}

struct ComputeArgs {
  std::string input, schema, output, config, warnings, accounting_lag, frequency;
  std::vector<std::string> aux, factors, params;
};

int cmd_compute(const ComputeArgs& a, std::ostream& out) {
  const json config = load_optional_config(a.config);
  const auto& registry = default_registry();

  ComputeRequest req;
  req.factors = split_list(a.factors);
  for (const auto& f : req.factors) {
    if (!registry.find(f)) throw LookupError("unknown factor '" + f + "'");
  }

  PanelFrame panel = load_panel(a.input, a.schema, config);
  if (!a.frequency.empty()) {
    const ColumnAggregation ret{"ret", Aggregation::compound};
    panel = resample(panel, parse_frequency(a.frequency), std::span(&ret, panel.has_column("ret") ? 1 : 0),
                     Aggregation::last);
  }
  if (!panel.has_column("ffo") && panel.has_column("ni") && panel.has_column("dp")) {
    panel = with_ffo_proxy(panel);
    diag::warn("no ffo column; using ni + dp as funds from operations");
  }

  // NAME=PATH, or a bare path named after its stem (sp500.csv -> sp500).
  for (const auto& item : a.aux) {
    if (item.find('=') == std::string::npos) {
      req.extras.tables[std::filesystem::path(item).stem().string()] = read_series_csv(item);
      continue;
    }
    const auto [name, path] = split_assignment(item, "--aux");
    req.extras.tables[name] = read_series_csv(path);
  }
  apply_coefficients(config, req.extras);
  req.params = params_from_config(config);
  for (const auto& item : a.params) {
    const auto [key, value] = split_assignment(item, "--param");
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ParameterError("--param expects FACTOR.NAME=VALUE, got '" + item + "'");
    double v = 0;
    if (!parse_cell(value, v) || is_null(v)) throw ParameterError("--param value '" + value + "' is not a number");
    req.params[key.substr(0, dot)][key.substr(dot + 1)] = v;
  }
  req.postprocess_override = postprocess_from_config(config);
  if (const auto lag = accounting_lag_from_config(config)) req.options.accounting_lag = *lag;
  if (!a.accounting_lag.empty()) req.options.accounting_lag = parse_lag(a.accounting_lag);

  const ComputeOutput result = compute(registry, panel, req);
  write_factor_file(fs::path(a.output), factor_file_from_frame(result.frame, result.computed));

  ojson side;
  side["computed"] = result.computed;
  side["skipped"] = ojson::array();
  for (const auto& w : result.warnings) side["skipped"].push_back({{"factor", w.factor}, {"missing", w.missing}});
  side["notes"] = ojson::object();
  for (const auto& [factor, notes] : result.notes) side["notes"][factor] = notes;
  side["join_passes"] = result.join_passes;
  write_file(a.warnings.empty() ? a.output + ".warnings.json" : a.warnings, side.dump(2) + "\n");

  out << "computed " << result.computed.size() << " factor(s) over " << panel.rows() << " rows";
  if (!result.warnings.empty()) out << "; skipped " << result.warnings.size();
  out << "\n";
  return ExitCode::ok;
}

struct BacktestArgs {
  std::string input, returns, schema, output, config, mode, rebalance, return_column = "ret";
  std::vector<std::string> factors;
  std::optional<double> fee_bps, selection, risk_free;
  std::size_t top = 5;
  bool weights = false;
};

int cmd_backtest(const BacktestArgs& a, std::ostream& out) {
  const json config = load_optional_config(a.config);
  StrategySettings settings = strategy_from_config(config);
  if (a.fee_bps) settings.base.fee_bps = *a.fee_bps;
  if (a.selection) settings.base.selection = parse_selection(*a.selection);
  if (a.risk_free) settings.base.risk_free_rate = *a.risk_free;
  if (!a.mode.empty()) settings.base.mode = parse_mode(a.mode);
  if (!a.rebalance.empty()) settings.base.rebalance = parse_rebalance(a.rebalance);
  settings.base.validate();

  const FactorFile file = read_factor_file(a.input);
  const PanelFrame factors = factor_file_to_frame(file);
  const PanelFrame returns = load_panel(a.returns, a.schema, config);
  if (!returns.has_column(a.return_column)) throw SchemaError("returns panel has no '" + a.return_column + "' column");

  std::vector<std::string> names = split_list(a.factors);
  if (names.empty()) names = file.factors();
  for (const auto& n : names) {
    if (!factors.has_column(n)) throw LookupError("factor '" + n + "' is not in " + a.input);
  }

  // Strategies are independent; run them concurrently and collect in order.
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<BacktestResult> results(names.size());
  for (std::size_t start = 0; start < names.size(); start += workers) {
    std::vector<std::future<BacktestResult>> batch;
    for (std::size_t i = start; i < std::min(names.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, [&, i] {
        return run_backtest(factors, names[i], returns, a.return_column, settings.for_factor(names[i]), a.weights);
      }));
    }
    for (std::size_t k = 0; k < batch.size(); ++k) results[start + k] = batch[k].get();
  }

  const fs::path dir(a.output);
  std::vector<LeaderboardEntry> entries;
  for (std::size_t i = 0; i < names.size(); ++i) {
    write_file(dir / (names[i] + ".json"), backtest_json(settings.for_factor(names[i]), results[i].report, a.weights));
    std::ostringstream curve;
    write_equity_csv(curve, results[i].curve);
    write_file(dir / (names[i] + "_equity.csv"), curve.str());
    results[i].report.weights.clear();
    entries.push_back({names[i], results[i].report});
  }
  const auto board = leaderboard(std::move(entries), a.top);
  write_file(dir / "leaderboard.json", leaderboard_json(board));
  std::ostringstream csv;
  write_leaderboard_csv(csv, board);
  write_file(dir / "leaderboard.csv", csv.str());

  auto fmt = [](double v) {
    if (is_null(v)) return std::string("null");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < board.size(); ++i) {
    const auto& r = board[i].report;
    out << i + 1 << ". " << board[i].factor << "  sharpe " << fmt(r.sharpe) << "  annualized " << fmt(r.annualized_return)
        << "  max drawdown " << fmt(r.max_drawdown) << "\n";
  }
  return ExitCode::ok;
}

struct ValidateArgs {
  std::string input, reference, output;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto report = validate(read_factor_file(a.input), read_factor_file(a.reference));
  out << format_validation_table(report);
  if (!a.output.empty()) write_file(a.output, validation_json(report));
  return ExitCode::ok;
}

struct SynthArgs {
  std::string output;
  SynthConfig config;
  bool binary = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const SynthData data = generate_synthetic(a.config);
  const fs::path dir(a.output);
  std::ostringstream panel, index;
  write_panel_csv(panel, data.panel);
  write_series_csv(index, data.index);
  write_file(dir / "panel.csv", panel.str());
  write_file(dir / (std::string(kIndexTable) + ".csv"), index.str());
  if (a.binary) write_panel_binary(dir / "panel.fepanel", data.panel);
  write_file(dir / "schema.toml", "id_col = \"id\"\ndate_col = \"date\"\n");
  out << "wrote " << data.panel.rows() << " rows for " << data.panel.asset_count() << " assets to " << dir.string()
      << "\n";
  return ExitCode::ok;
}

int cmd_list(std::ostream& out) {
  const auto& registry = default_registry();
  for (const auto& name : registry.names()) {
    const auto& def = registry.at(name).def;
    out << name << (def.kind == FactorKind::advanced ? " (advanced)" : "") << ": " << def.description << "\n";
  }
  return ExitCode::ok;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ContractViolation*>(&e) || dynamic_cast<const DefinitionError*>(&e) ||
      dynamic_cast<const RegistrationError*>(&e)) {
    return ExitCode::contract;
  }
  if (dynamic_cast<const LookupError*>(&e) || dynamic_cast<const ParameterError*>(&e)) return ExitCode::usage;
  return ExitCode::io;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-in-time factor computation, validation and single-factor backtests"};
  app.require_subcommand(1);

  ComputeArgs ca;
  auto* compute_cmd = app.add_subcommand("compute", "compute factors into a factor file");
  compute_cmd->add_option("--input", ca.input, "panel CSV or .fepanel file")->required();
  compute_cmd->add_option("--schema", ca.schema, "schema TOML/JSON (id_col, date_col, [columns])");
  compute_cmd->add_option("--output", ca.output, "factor file to write")->required();
  compute_cmd->add_option("--aux", ca.aux, "auxiliary table NAME=PATH, or a path named by its stem");
  compute_cmd->add_option("--factors", ca.factors, "comma-separated factor names (default all)");
  compute_cmd->add_option("--config", ca.config, "TOML/JSON with [params.*], [oscore], [distress], [postprocess]");
  compute_cmd->add_option("--param", ca.params, "FACTOR.NAME=VALUE parameter override");
  compute_cmd->add_option("--accounting-lag", ca.accounting_lag, "availability lag for accounting items, e.g. 3mo");
  compute_cmd->add_option("--frequency", ca.frequency, "resample the input first: monthly, quarterly, annual");
  compute_cmd->add_option("--warnings", ca.warnings, "warnings sidecar path (default <output>.warnings.json)");

  BacktestArgs ba;
  auto* backtest_cmd = app.add_subcommand("backtest", "single-factor backtests with a Sharpe leaderboard");
  backtest_cmd->add_option("--input", ba.input, "factor file")->required();
  backtest_cmd->add_option("--returns", ba.returns, "panel with period returns")->required();
  backtest_cmd->add_option("--schema", ba.schema, "schema for the returns panel");
  backtest_cmd->add_option("--output", ba.output, "output directory")->required();
  backtest_cmd->add_option("--config", ba.config, "TOML/JSON with a [strategy] table");
  backtest_cmd->add_option("--factors", ba.factors, "comma-separated factor names (default all in the file)");
  backtest_cmd->add_option("--return-column", ba.return_column, "return column in the returns panel");
  backtest_cmd->add_option("--fee-bps", ba.fee_bps, "fee in basis points of turnover");
  backtest_cmd->add_option("--selection", ba.selection, "fraction (<1) or count (>=1) per leg");
  backtest_cmd->add_option("--risk-free", ba.risk_free, "annual risk-free rate");
  backtest_cmd->add_option("--mode", ba.mode, "long_only or long_short");
  backtest_cmd->add_option("--rebalance", ba.rebalance, "daily or monthly");
  backtest_cmd->add_option("--top", ba.top, "leaderboard size (0 for all)");
  backtest_cmd->add_flag("--weights", ba.weights, "include per-period weights in the JSON reports");

  ValidateArgs va;
  auto* validate_cmd = app.add_subcommand("validate", "Pearson correlation against a reference factor file");
  validate_cmd->add_option("--input", va.input, "our factor file")->required();
  validate_cmd->add_option("--reference", va.reference, "reference factor file")->required();
  validate_cmd->add_option("--output", va.output, "JSON report path");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  synth_cmd->add_option("--output", sa.output, "output directory")->required();
  synth_cmd->add_option("--seed", sa.config.seed, "random seed");
  synth_cmd->add_option("--assets", sa.config.assets, "number of assets");
  synth_cmd->add_option("--months", sa.config.months, "number of month-ends");
  synth_cmd->add_option("--null-rate", sa.config.null_rate, "probability of a null cell");
  synth_cmd->add_option("--gap-rate", sa.config.gap_rate, "probability of a missing row");
  synth_cmd->add_flag("--binary", sa.binary, "also write panel.fepanel");

  auto* list_cmd = app.add_subcommand("list", "list registered factors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::usage;
  }

  try {
    if (compute_cmd->parsed()) return cmd_compute(ca, out);
    if (backtest_cmd->parsed()) return cmd_backtest(ba, out);
    if (validate_cmd->parsed()) return cmd_validate(va, out);
    if (synth_cmd->parsed()) return cmd_synth(sa, out);
    if (list_cmd->parsed()) return cmd_list(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return ExitCode::usage;
}

}  // namespace fe::cli
