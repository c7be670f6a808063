#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fe/date.hpp"

namespace fe {

// Cells are IEEE doubles; null is represented by NaN and every arithmetic
// operation on null yields null.
inline constexpr double null_value = std::numeric_limits<double>::quiet_NaN();
inline bool is_null(double v) noexcept { return std::isnan(v); }

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

// Unvalidated row-aligned table: keys plus any number of numeric columns.
// Used for ingestion and as the return type of advanced factor bodies.
struct Table {
  std::vector<std::string> ids;
  std::vector<Date> dates;
  std::vector<NamedColumn> columns;

  std::size_t rows() const noexcept { return ids.size(); }
};

// Immutable columnar panel sorted by (id, date) with unique keys.
//
// Keys and columns are held through shared_ptr-to-const, so deriving a frame
// with one more column copies pointers, not data, and frames may be shared
// freely across threads.
class PanelFrame {
 public:
  struct Keys {
    std::vector<std::string> assets;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> asset_of_row;
    std::vector<Date> dates;
  };

  PanelFrame();

  // Sorts rows by (id, date). Throws IntegrityError on duplicate keys and
  // SchemaError when column lengths disagree or names repeat.
  static PanelFrame from_table(Table table);

  std::size_t rows() const noexcept { return keys_->dates.size(); }
  std::size_t asset_count() const noexcept { return keys_->assets.size(); }
  bool empty() const noexcept { return rows() == 0; }

  std::span<const std::string> asset_ids() const noexcept { return keys_->assets; }
  std::span<const Date> dates() const noexcept { return keys_->dates; }

  // Row range [first, second) of the asset at `asset` (index into asset_ids()).
  std::pair<std::size_t, std::size_t> asset_rows(std::size_t asset) const {
    return {keys_->offsets[asset], keys_->offsets[asset + 1]};
  }
  std::size_t asset_of_row(std::size_t row) const { return keys_->asset_of_row[row]; }
  const std::string& id(std::size_t row) const { return keys_->assets[keys_->asset_of_row[row]]; }
  Date date(std::size_t row) const { return keys_->dates[row]; }

  bool has_column(std::string_view name) const;
  // Throws SchemaError naming the column when absent.
  std::span<const double> column(std::string_view name) const;
  std::vector<std::string> column_names() const;
  std::size_t column_count() const noexcept { return columns_.size(); }

  // Adds or replaces a column. Throws SchemaError on length mismatch.
  PanelFrame with_column(std::string name, std::vector<double> values) const;
  PanelFrame without_column(std::string_view name) const;
  PanelFrame select(std::span<const std::string> names) const;

  // True when both frames share the very same key storage.
  bool shares_keys_with(const PanelFrame& other) const noexcept { return keys_ == other.keys_; }
  // True when both frames have identical (id, date) sequences.
  bool same_keys(const PanelFrame& other) const;

  Table to_table() const;

  // Builds a frame from already sorted, unique keys. Used by operations that
  // produce new key sets (resample); the caller vouches for the invariants.
  static PanelFrame from_sorted_keys(std::shared_ptr<const Keys> keys,
                                     std::vector<NamedColumn> columns);
  const std::shared_ptr<const Keys>& keys() const noexcept { return keys_; }

 private:
  using ColumnPtr = std::shared_ptr<const std::vector<double>>;

  std::shared_ptr<const Keys> keys_;
  std::vector<std::pair<std::string, ColumnPtr>> columns_;

  std::ptrdiff_t find(std::string_view name) const;
};

// Bitwise comparison of keys, column names (in order) and every cell,
// treating null as equal to null.
bool identical(const PanelFrame& a, const PanelFrame& b);

// Groups row indices by date, ascending; rows within a group keep id order.
std::vector<std::vector<std::size_t>> cross_sections(const PanelFrame& frame);

// The fixed canonical column vocabulary (excluding id and date).
std::span<const std::string_view> canonical_columns();
bool is_canonical_column(std::string_view name);
// Balance-sheet and income-statement items that are subject to the
// accounting availability lag.
bool is_accounting_column(std::string_view name);

struct ColumnMapping {
  std::string source;
  std::string canonical;
};

// How a raw table's headers map onto canonical names.
struct ColumnSchema {
  std::string id_col;
  std::string date_col;
  std::vector<ColumnMapping> mappings;

  // Throws SchemaError: empty id/date names, repeated canonical names, or a
  // canonical name of "id"/"date".
  void validate() const;

  // Schema that keeps every non-key header under its own name.
  static ColumnSchema identity(std::span<const std::string> headers, std::string id_col = "id",
                               std::string date_col = "date");
};

}  // namespace fe
