#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fe/io.hpp"
#include "fe/lag.hpp"
#include "fe/panel.hpp"

namespace fe {

using ParamMap = std::map<std::string, double, std::less<>>;
using CoefficientSet = std::map<std::string, double, std::less<>>;

// Named auxiliary inputs handed to factor bodies: date-indexed tables (an
// index series) and coefficient sections loaded from configuration.
struct Extras {
  std::map<std::string, SeriesTable, std::less<>> tables;
  std::map<std::string, CoefficientSet, std::less<>> coefficients;

  bool has(std::string_view name) const { return tables.contains(name) || coefficients.contains(name); }
};

enum class FactorKind { simple, advanced };

struct Winsorization {
  double lower_q = 0.0;
  double upper_q = 1.0;
};

// Applied to factor output, winsorization first.
struct Postprocess {
  std::optional<Winsorization> winsorize;
  bool zscore = false;
};

struct FactorDef {
  std::string name;
  FactorKind kind = FactorKind::simple;
  std::vector<std::string> required_columns;
  // Names that must be present in Extras (tables or coefficient sections).
  std::vector<std::string> required_extras;
  ParamMap params;
  Postprocess postprocess;
  std::string description;
};

// Validated (id, date, value) output of one factor. The backing frame has a
// single column named "value" and often shares its keys with the input.
class FactorResult {
 public:
  // Checks the three-column contract: exactly one value column, keys sorted
  // and unique. Throws ContractViolation naming `factor`.
  static FactorResult from_table(Table table, std::string_view factor);
  static FactorResult from_values(const PanelFrame& keys, std::vector<double> values);

  const PanelFrame& frame() const noexcept { return frame_; }
  std::span<const double> values() const { return frame_.column("value"); }
  std::size_t rows() const noexcept { return frame_.rows(); }

  // Free-form metadata, e.g. approximations a body had to make.
  std::vector<std::string> notes;

 private:
  PanelFrame frame_;
};

// Handle to a column requested during the declaration phase.
struct ColumnRef {
  std::size_t slot = 0;
};

class OffsetRegistry;

// Passed to a factor body while it declares its inputs. Every col() call
// becomes a deferred lag request; nothing is computed until all requested
// factors have declared.
//
// Accounting columns are shifted by ComputeOptions::accounting_lag on top of
// the requested lag, so bodies always read data as it was known at t.
class FactorContext {
 public:
  FactorContext(const FactorDef& def, ParamMap params, Lag accounting_lag, OffsetRegistry& offsets);

  // Value of `column` as of t − lag. Throws DefinitionError when the column
  // is not among the factor's required columns.
  ColumnRef col(std::string_view column, Lag lag = {}, std::optional<Lag> max_staleness = std::nullopt);

  // Merged parameters (call site over defaults).
  double param(std::string_view name) const;
  int param_int(std::string_view name) const;
  const ParamMap& params() const noexcept { return params_; }

  const std::string& factor() const noexcept { return def_.name; }
  void note(std::string text) { notes_.push_back(std::move(text)); }

  const std::vector<std::string>& slots() const noexcept { return slots_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

 private:
  const FactorDef& def_;
  ParamMap params_;
  Lag accounting_lag_;
  OffsetRegistry& offsets_;
  std::vector<std::string> slots_;
  std::vector<std::string> notes_;
};

// One row of the materialized frame, addressed through ColumnRefs.
class Row {
 public:
  Row(std::span<const std::span<const double>> columns, std::size_t row) : columns_(columns), row_(row) {}
  double operator[](ColumnRef ref) const { return columns_[ref.slot][row_]; }
  std::size_t index() const noexcept { return row_; }

 private:
  std::span<const std::span<const double>> columns_;
  std::size_t row_;
};

// What an advanced body's evaluator receives: the full materialized history.
struct AdvancedInput {
  const PanelFrame& frame;
  const Extras& extras;
  const ParamMap& params;
  std::span<const std::span<const double>> columns;

  std::span<const double> operator[](ColumnRef ref) const { return columns[ref.slot]; }
};

using RowExpr = std::function<double(const Row&)>;
using SimpleBody = std::function<RowExpr(FactorContext&)>;
using AdvancedEval = std::function<Table(const AdvancedInput&)>;
using AdvancedBody = std::function<AdvancedEval(FactorContext&)>;
using FactorBody = std::variant<SimpleBody, AdvancedBody>;

struct RegisteredFactor {
  FactorDef def;
  FactorBody body;
};

// Insertion-ordered factor registry. Registration takes a write lock;
// lookups take a shared lock and return references that stay valid for the
// registry's lifetime.
class FactorRegistry {
 public:
  // Throws RegistrationError on a duplicate name, a required column outside
  // the canonical vocabulary, a body whose kind disagrees with def.kind, or
  // invalid postprocess quantiles.
  void add(FactorDef def, FactorBody body);
  void add_simple(FactorDef def, SimpleBody body);
  void add_advanced(FactorDef def, AdvancedBody body);

  const RegisteredFactor* find(std::string_view name) const;
  // Throws LookupError.
  const RegisteredFactor& at(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::deque<RegisteredFactor> entries_;
};

struct Requirements {
  bool satisfied = true;
  std::vector<std::string> missing;
};

// Required columns absent from the frame (and, with extras, required
// extras absent from them). Never throws.
Requirements check_requirements(const FactorDef& def, const PanelFrame& frame);
Requirements check_requirements(const FactorDef& def, const PanelFrame& frame, const Extras& extras);

struct ComputeOptions {
  // Delay before accounting data counts as known.
  Lag accounting_lag = Lag::months(3);
};

FactorResult run_simple(const FactorDef& def, const SimpleBody& body, const PanelFrame& frame,
                        const ParamMap& params = {}, const ComputeOptions& options = {});

// Throws ParameterError when a required extra is missing.
FactorResult run_advanced(const FactorDef& def, const AdvancedBody& body, const PanelFrame& frame,
                          const ParamMap& params, const Extras& extras, const ComputeOptions& options = {});

struct SkipWarning {
  std::string factor;
  std::vector<std::string> missing;
};

struct ComputeRequest {
  // Empty means every registered factor.
  std::vector<std::string> factors;
  // Per-factor parameter overrides.
  std::map<std::string, ParamMap, std::less<>> params;
  Extras extras;
  ComputeOptions options;
  std::optional<Postprocess> postprocess_override;
};

struct ComputeOutput {
  PanelFrame frame;
  std::vector<std::string> computed;
  std::vector<SkipWarning> warnings;
  std::map<std::string, std::vector<std::string>, std::less<>> notes;
  std::size_t join_passes = 0;
};

// Runs the requested factors and left-joins each onto the input under its
// own name, in request order. Factors with unmet requirements are skipped,
// reported in `warnings` and mirrored to the diagnostic log. Throws
// LookupError for unknown names and ParameterError for bad parameters.
ComputeOutput compute(const FactorRegistry& registry, const PanelFrame& frame, const ComputeRequest& request);

// Left join of a factor result onto `frame` keyed by (id, date).
std::vector<double> align_to(const PanelFrame& frame, const FactorResult& result);

}  // namespace fe
