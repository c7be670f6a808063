#include "fe/registry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <set>

#include "fe/diagnostics.hpp"
#include "fe/error.hpp"
#include "fe/preprocess.hpp"

namespace fe {

FactorResult FactorResult::from_table(Table table, std::string_view factor) {
  const std::string who = "factor '" + std::string(factor) + "'";
  if (table.columns.size() != 1) {
    throw ContractViolation(who + " returned " + std::to_string(table.columns.size() + 2) +
                            " columns; expected 3 (id, date, value)");
  }
  const std::size_t n = table.ids.size();
  if (table.dates.size() != n || table.columns[0].values.size() != n) {
    throw ContractViolation(who + " returned columns of unequal length");
  }
  for (std::size_t i = 1; i < n; ++i) {
    const int cmp = table.ids[i - 1].compare(table.ids[i]);
    if (cmp == 0 && table.dates[i - 1] == table.dates[i]) {
      throw ContractViolation(who + " returned duplicate key (" + table.ids[i] + ", " + format_date(table.dates[i]) +
                              ")");
    }
    if (cmp > 0 || (cmp == 0 && table.dates[i - 1] > table.dates[i])) {
      throw ContractViolation(who + " returned rows not sorted by (id, date)");
    }
  }
  table.columns[0].name = "value";
  FactorResult result;
  result.frame_ = PanelFrame::from_table(std::move(table));
  return result;
}

FactorResult FactorResult::from_values(const PanelFrame& keys, std::vector<double> values) {
  FactorResult result;
  result.frame_ = keys.select({}).with_column("value", std::move(values));
  return result;
}

FactorContext::FactorContext(const FactorDef& def, ParamMap params, Lag accounting_lag, OffsetRegistry& offsets)
    : def_(def), params_(std::move(params)), accounting_lag_(accounting_lag), offsets_(offsets) {}

ColumnRef FactorContext::col(std::string_view column, Lag lag, std::optional<Lag> max_staleness) {
  const auto& req = def_.required_columns;
  if (std::find(req.begin(), req.end(), column) == req.end()) {
    throw DefinitionError("factor '" + def_.name + "' references column '" + std::string(column) +
                          "' which it does not require");
  }
  const Lag effective = is_accounting_column(column) ? combine(lag, accounting_lag_) : lag;
  slots_.push_back(offsets_.request(OffsetKey{std::string(column), effective, max_staleness}));
  return ColumnRef{slots_.size() - 1};
}

double FactorContext::param(std::string_view name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) {
    throw DefinitionError("factor '" + def_.name + "' reads undeclared parameter '" + std::string(name) + "'");
  }
  return it->second;
}

int FactorContext::param_int(std::string_view name) const {
  const double v = param(name);
  if (v != std::floor(v) || std::abs(v) > 1e6) {
    throw ParameterError("parameter '" + std::string(name) + "' of factor '" + def_.name + "' must be an integer");
  }
  return static_cast<int>(v);
}

void FactorRegistry::add(FactorDef def, FactorBody body) {
  const bool simple_body = std::holds_alternative<SimpleBody>(body);
  if (simple_body != (def.kind == FactorKind::simple)) {
    throw RegistrationError("factor '" + def.name + "': body does not match its declared kind");
  }
  if (def.name.empty()) throw RegistrationError("factor name must not be empty");
  for (const auto& c : def.required_columns) {
    if (!is_canonical_column(c)) {
      throw RegistrationError("factor '" + def.name + "' requires non-canonical column '" + c + "'");
    }
  }
  if (const auto& w = def.postprocess.winsorize; w && !(w->lower_q >= 0 && w->lower_q < w->upper_q && w->upper_q <= 1)) {
    throw RegistrationError("factor '" + def.name + "' has invalid winsorize quantiles");
  }
  std::unique_lock lock(mutex_);
  for (const auto& e : entries_) {
    if (e.def.name == def.name) throw RegistrationError("factor '" + def.name + "' is already registered");
  }
  entries_.push_back({std::move(def), std::move(body)});
}

void FactorRegistry::add_simple(FactorDef def, SimpleBody body) {
  def.kind = FactorKind::simple;
  add(std::move(def), FactorBody{std::move(body)});
}

void FactorRegistry::add_advanced(FactorDef def, AdvancedBody body) {
  def.kind = FactorKind::advanced;
  add(std::move(def), FactorBody{std::move(body)});
}

const RegisteredFactor* FactorRegistry::find(std::string_view name) const {
  std::shared_lock lock(mutex_);
  for (const auto& e : entries_) {
    if (e.def.name == name) return &e;
  }
  return nullptr;
}

const RegisteredFactor& FactorRegistry::at(std::string_view name) const {
  if (const auto* e = find(name)) return *e;
  throw LookupError("unknown factor '" + std::string(name) + "'");
}

std::vector<std::string> FactorRegistry::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.def.name);
  return out;
}

std::size_t FactorRegistry::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

Requirements check_requirements(const FactorDef& def, const PanelFrame& frame) {
  Requirements r;
  for (const auto& c : def.required_columns) {
    if (!frame.has_column(c)) r.missing.push_back(c);
  }
  r.satisfied = r.missing.empty();
  return r;
}

Requirements check_requirements(const FactorDef& def, const PanelFrame& frame, const Extras& extras) {
  Requirements r = check_requirements(def, frame);
  for (const auto& e : def.required_extras) {
    if (!extras.has(e)) r.missing.push_back(e);
  }
  r.satisfied = r.missing.empty();
  return r;
}

namespace {

ParamMap merge_params(const FactorDef& def, const ParamMap& overrides) {
  ParamMap merged = def.params;
  for (const auto& [name, value] : overrides) {
    const auto it = merged.find(name);
    if (it == merged.end()) {
      throw ParameterError("factor '" + def.name + "' has no parameter '" + name + "'");
    }
    it->second = value;
  }
  return merged;
}

struct Prepared {
  const FactorDef* def;
  std::unique_ptr<FactorContext> ctx;
  std::variant<RowExpr, AdvancedEval> eval;
};

Prepared declare(const FactorDef& def, const FactorBody& body, const ParamMap& overrides, Lag accounting_lag,
                 OffsetRegistry& offsets) {
  Prepared p{&def, std::make_unique<FactorContext>(def, merge_params(def, overrides), accounting_lag, offsets), {}};
  if (const auto* simple = std::get_if<SimpleBody>(&body)) {
    p.eval = (*simple)(*p.ctx);
  } else {
    p.eval = std::get<AdvancedBody>(body)(*p.ctx);
  }
  return p;
}

FactorResult postprocess(FactorResult result, const Postprocess& pp) {
  if (!pp.winsorize && !pp.zscore) return result;
  const PanelFrame& f = result.frame();
  std::vector<double> v(result.values().begin(), result.values().end());
  if (pp.winsorize) v = winsorize_by_date(f, v, pp.winsorize->lower_q, pp.winsorize->upper_q);
  if (pp.zscore) v = zscore_by_date(f, v);
  auto notes = std::move(result.notes);
  FactorResult out = FactorResult::from_values(f, std::move(v));
  out.notes = std::move(notes);
  return out;
}

FactorResult evaluate(const Prepared& p, const PanelFrame& materialized, const Extras& extras,
                      const Postprocess& pp) {
  std::vector<std::span<const double>> columns;
  for (const auto& name : p.ctx->slots()) columns.push_back(materialized.column(name));

  FactorResult result;
  if (const auto* expr = std::get_if<RowExpr>(&p.eval)) {
    std::vector<double> values(materialized.rows());
    for (std::size_t r = 0; r < values.size(); ++r) {
      const double v = (*expr)(Row(columns, r));
      values[r] = std::isfinite(v) ? v : null_value;
    }
    result = FactorResult::from_values(materialized, std::move(values));
  } else {
    const AdvancedInput input{materialized, extras, p.ctx->params(), columns};
    Table table = std::get<AdvancedEval>(p.eval)(input);
    for (auto& c : table.columns) {
      for (double& v : c.values) {
        if (!std::isfinite(v)) v = null_value;
      }
    }
    result = FactorResult::from_table(std::move(table), p.def->name);
  }
  result.notes = p.ctx->notes();
  return postprocess(std::move(result), pp);
}

void require_columns(const FactorDef& def, const PanelFrame& frame) {
  const auto req = check_requirements(def, frame);
  if (!req.satisfied) {
    std::string list;
    for (const auto& m : req.missing) list += (list.empty() ? "" : ", ") + m;
    throw SchemaError("factor '" + def.name + "' is missing required columns: " + list);
  }
}

}  // namespace

FactorResult run_simple(const FactorDef& def, const SimpleBody& body, const PanelFrame& frame,
                        const ParamMap& params, const ComputeOptions& options) {
  require_columns(def, frame);
  OffsetRegistry offsets(frame.column_names());
  const Prepared p = declare(def, FactorBody{body}, params, options.accounting_lag, offsets);
  const PanelFrame materialized = offsets.compute_offset_data(frame);
  return evaluate(p, materialized, Extras{}, def.postprocess);
}

FactorResult run_advanced(const FactorDef& def, const AdvancedBody& body, const PanelFrame& frame,
                          const ParamMap& params, const Extras& extras, const ComputeOptions& options) {
  require_columns(def, frame);
  for (const auto& e : def.required_extras) {
    if (!extras.has(e)) throw ParameterError("factor '" + def.name + "' requires auxiliary input '" + e + "'");
  }
  OffsetRegistry offsets(frame.column_names());
  const Prepared p = declare(def, FactorBody{body}, params, options.accounting_lag, offsets);
  const PanelFrame materialized = offsets.compute_offset_data(frame);
  return evaluate(p, materialized, extras, def.postprocess);
}

std::vector<double> align_to(const PanelFrame& frame, const FactorResult& result) {
  const PanelFrame& rf = result.frame();
  const auto values = result.values();
  if (frame.same_keys(rf)) return {values.begin(), values.end()};

  std::vector<double> out(frame.rows(), null_value);
  const auto ids = rf.asset_ids();
  for (std::size_t a = 0; a < frame.asset_count(); ++a) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), frame.asset_ids()[a]);
    if (it == ids.end() || *it != frame.asset_ids()[a]) continue;
    const auto [fb, fe_] = frame.asset_rows(a);
    const auto [rb, re] = rf.asset_rows(static_cast<std::size_t>(it - ids.begin()));
    std::size_t j = rb;
    for (std::size_t i = fb; i < fe_; ++i) {
      while (j < re && rf.date(j) < frame.date(i)) ++j;
      if (j < re && rf.date(j) == frame.date(i)) out[i] = values[j];
    }
  }
  return out;
}

ComputeOutput compute(const FactorRegistry& registry, const PanelFrame& frame, const ComputeRequest& request) {
  std::vector<const RegisteredFactor*> wanted;
  if (request.factors.empty()) {
    for (const auto& name : registry.names()) wanted.push_back(&registry.at(name));
  } else {
    std::set<std::string_view> seen;
    for (const auto& name : request.factors) {
      const auto& entry = registry.at(name);
      if (seen.insert(entry.def.name).second) wanted.push_back(&entry);
    }
  }
  for (const auto& [name, _] : request.params) {
    const auto& entry = registry.at(name);
    if (std::find(wanted.begin(), wanted.end(), &entry) == wanted.end()) {
      throw ParameterError("parameters given for factor '" + name + "' which is not being computed");
    }
  }

  ComputeOutput out;
  OffsetRegistry offsets(frame.column_names());
  std::vector<Prepared> prepared;
  for (const auto* entry : wanted) {
    const auto req = check_requirements(entry->def, frame, request.extras);
    if (!req.satisfied) {
      std::string list;
      for (const auto& m : req.missing) list += (list.empty() ? "" : ", ") + m;
      diag::warn("skipping factor '" + entry->def.name + "': missing " + list);
      out.warnings.push_back({entry->def.name, req.missing});
      continue;
    }
    const auto it = request.params.find(entry->def.name);
    const ParamMap none;
    prepared.push_back(declare(entry->def, entry->body, it == request.params.end() ? none : it->second,
                               request.options.accounting_lag, offsets));
  }

  const PanelFrame materialized = offsets.compute_offset_data(frame);
  out.join_passes = offsets.join_passes();

  out.frame = frame;
  for (const auto& p : prepared) {
    const Postprocess& pp = request.postprocess_override ? *request.postprocess_override : p.def->postprocess;
    FactorResult result = evaluate(p, materialized, request.extras, pp);
    out.frame = out.frame.with_column(p.def->name, align_to(frame, result));
    if (!result.notes.empty()) out.notes[p.def->name] = result.notes;
    out.computed.push_back(p.def->name);
  }
  return out;
}

}  // namespace fe
