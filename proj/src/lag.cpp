#include "fe/lag.hpp"

#include <algorithm>
#include <map>

#include "fe/error.hpp"

namespace fe {

std::string lagged_column_name(const OffsetKey& key) {
  if (key.lag.is_zero()) return key.column;
  std::string name = key.column + "_lag_" + key.lag.suffix();
  if (key.max_staleness) name += "_within_" + key.max_staleness->suffix();
  return name;
}

PanelFrame join_with_offset(const PanelFrame& frame, Lag lag, std::span<const OffsetKey> keys) {
  std::vector<const OffsetKey*> active;
  for (const auto& k : keys) {
    if (k.lag != lag) throw ParameterError("join_with_offset: key " + lagged_column_name(k) + " has a different lag");
    if (!k.lag.is_zero()) active.push_back(&k);
  }
  if (active.empty()) return frame;

  std::vector<std::span<const double>> src;
  for (const auto* k : active) src.push_back(frame.column(k->column));

  const std::size_t n = frame.rows();
  std::vector<std::vector<double>> out(active.size(), std::vector<double>(n, null_value));
  const auto dates = frame.dates();

  for (std::size_t a = 0; a < frame.asset_count(); ++a) {
    const auto [begin, end] = frame.asset_rows(a);
    const auto first = dates.begin() + static_cast<std::ptrdiff_t>(begin);
    const auto last = dates.begin() + static_cast<std::ptrdiff_t>(end);
    for (std::size_t r = begin; r < end; ++r) {
      const Date target = shift_back(dates[r], lag);
      // Most recent row of this asset dated at or before the target.
      const auto it = std::upper_bound(first, last, target);
      if (it == first) continue;
      const auto match = static_cast<std::size_t>(it - dates.begin()) - 1;
      for (std::size_t k = 0; k < active.size(); ++k) {
        const auto& staleness = active[k]->max_staleness;
        if (staleness && dates[match] <= shift_back(target, *staleness)) continue;
        out[k][r] = src[k][match];
      }
    }
  }

  PanelFrame result = frame;
  for (std::size_t k = 0; k < active.size(); ++k) {
    result = result.with_column(lagged_column_name(*active[k]), std::move(out[k]));
  }
  return result;
}

PanelFrame join_with_offset(const PanelFrame& frame, Lag lag, std::span<const std::string> columns) {
  std::vector<OffsetKey> keys;
  for (const auto& c : columns) keys.push_back({c, lag, std::nullopt});
  return join_with_offset(frame, lag, keys);
}

OffsetRegistry::OffsetRegistry(std::vector<std::string> known_columns)
    : known_(std::make_move_iterator(known_columns.begin()), std::make_move_iterator(known_columns.end())) {}

std::string OffsetRegistry::request(const OffsetKey& key) {
  if (!known_.contains(key.column)) throw SchemaError("unknown column '" + key.column + "'");
  if (key.lag.count < 0) throw ParameterError("negative lag for column '" + key.column + "'");
  if (!key.lag.is_zero() && !materialized_.contains(key)) pending_.insert(key);
  return lagged_column_name(key);
}

PanelFrame OffsetRegistry::compute_offset_data(const PanelFrame& frame) {
  std::map<Lag, std::vector<OffsetKey>> by_lag;
  for (const auto& k : pending_) by_lag[k.lag].push_back(k);

  PanelFrame out = frame;
  for (const auto& [lag, keys] : by_lag) {
    out = join_with_offset(out, lag, keys);
    ++join_passes_;
  }
  materialized_.insert(pending_.begin(), pending_.end());
  pending_.clear();
  return out;
}

}  // namespace fe
