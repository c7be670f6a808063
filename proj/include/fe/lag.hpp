#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fe/date.hpp"
#include "fe/panel.hpp"

namespace fe {

// One deferred lag request: the value of `column` as of (t − lag).
//
// With `max_staleness` set, a match is accepted only when its date is later
// than (t − lag) − max_staleness; otherwise the cell is null. On a month-end
// panel a staleness of one month therefore demands the exact target month.
struct OffsetKey {
  std::string column;
  Lag lag;
  std::optional<Lag> max_staleness;

  friend auto operator<=>(const OffsetKey&, const OffsetKey&) = default;
};

// `<column>_lag_<count><unit>`, plus `_within_<count><unit>` when a staleness
// bound is set. A zero lag names the contemporaneous column itself.
std::string lagged_column_name(const OffsetKey& key);

// As-of self-join. For every row (i, t) and every key, adds a column holding
// the key's column for asset i at the most recent date <= t − lag (null when
// none). All keys must share `lag`; they are resolved together in a single
// pass over each asset's rows. Zero-lag keys are ignored.
PanelFrame join_with_offset(const PanelFrame& frame, Lag lag, std::span<const OffsetKey> keys);
PanelFrame join_with_offset(const PanelFrame& frame, Lag lag, std::span<const std::string> columns);

// Collects lag requests (phase 1) and materializes them in bulk (phase 2),
// one join_with_offset call per distinct lag.
//
// Not synchronized: requests need exclusive access, and callers must not
// interleave request() with compute_offset_data().
class OffsetRegistry {
 public:
  explicit OffsetRegistry(std::vector<std::string> known_columns);

  // Records the key (idempotent) and returns its column name. Zero lags are
  // never pending. Throws SchemaError for an unknown column.
  std::string request(const OffsetKey& key);

  // Joins every pending key onto `frame`, grouped by lag, and marks the keys
  // materialized. Returns `frame` unchanged when nothing is pending.
  PanelFrame compute_offset_data(const PanelFrame& frame);

  const std::set<OffsetKey>& pending() const noexcept { return pending_; }
  const std::set<OffsetKey>& materialized() const noexcept { return materialized_; }

  // Number of join_with_offset passes performed so far.
  std::size_t join_passes() const noexcept { return join_passes_; }

 private:
  std::set<std::string, std::less<>> known_;
  std::set<OffsetKey> pending_;
  std::set<OffsetKey> materialized_;
  std::size_t join_passes_ = 0;
};

}  // namespace fe
