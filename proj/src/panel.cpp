#include "fe/panel.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <numeric>
#include <set>

#include "fe/error.hpp"

namespace fe {

namespace {

constexpr std::array<std::string_view, 20> kCanonical = {
    "mv",  "ret", "price", "shares", "ta",    "ibq",  "gp", "cash", "ca", "cl",
    "std", "ltd", "txp",   "dp",     "ppegt", "invt", "ni", "tl",   "ceq", "ffo"};

constexpr std::array<std::string_view, 16> kAccounting = {
    "ta", "ibq", "gp", "cash", "ca", "cl", "std", "ltd", "txp", "dp", "ppegt", "invt", "ni", "tl", "ceq", "ffo"};

bool same_bits(double a, double b) {
  if (is_null(a) || is_null(b)) return is_null(a) && is_null(b);
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

PanelFrame::PanelFrame() : keys_(std::make_shared<Keys>(Keys{{}, {0}, {}, {}})) {}

PanelFrame PanelFrame::from_table(Table table) {
  const std::size_t n = table.ids.size();
  if (table.dates.size() != n) {
    throw SchemaError("table has " + std::to_string(n) + " ids but " + std::to_string(table.dates.size()) +
                      " dates");
  }
  std::set<std::string_view> names;
  for (const auto& c : table.columns) {
    if (c.values.size() != n) {
      throw SchemaError("column '" + c.name + "' has " + std::to_string(c.values.size()) + " cells, expected " +
                        std::to_string(n));
    }
    if (c.name == "id" || c.name == "date" || !names.insert(c.name).second) {
      throw SchemaError("duplicate or reserved column name '" + c.name + "'");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool sorted = std::is_sorted(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(table.ids[a], table.dates[a]) < std::tie(table.ids[b], table.dates[b]);
  });
  if (!sorted) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(table.ids[a], table.dates[a]) < std::tie(table.ids[b], table.dates[b]);
    });
  }

  auto keys = std::make_shared<Keys>();
  keys->dates.reserve(n);
  keys->asset_of_row.reserve(n);
  keys->offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = order[i];
    if (i > 0) {
      const std::size_t p = order[i - 1];
      if (table.ids[p] == table.ids[r]) {
        if (table.dates[p] == table.dates[r]) {
          throw IntegrityError("duplicate key (" + table.ids[r] + ", " + format_date(table.dates[r]) + ")");
        }
      } else {
        keys->offsets.push_back(i);
      }
    }
    if (i == 0 || table.ids[order[i - 1]] != table.ids[r]) keys->assets.push_back(table.ids[r]);
    keys->asset_of_row.push_back(static_cast<std::uint32_t>(keys->assets.size() - 1));
    keys->dates.push_back(table.dates[r]);
  }
  if (n > 0) keys->offsets.push_back(n);

  PanelFrame frame;
  frame.keys_ = std::move(keys);
  for (auto& c : table.columns) {
    std::vector<double> values;
    if (sorted) {
      values = std::move(c.values);
    } else {
      values.resize(n);
      for (std::size_t i = 0; i < n; ++i) values[i] = c.values[order[i]];
    }
    frame.columns_.emplace_back(std::move(c.name), std::make_shared<const std::vector<double>>(std::move(values)));
  }
  return frame;
}

PanelFrame PanelFrame::from_sorted_keys(std::shared_ptr<const Keys> keys, std::vector<NamedColumn> columns) {
  PanelFrame frame;
  frame.keys_ = std::move(keys);
  for (auto& c : columns) frame = frame.with_column(std::move(c.name), std::move(c.values));
  return frame;
}

std::ptrdiff_t PanelFrame::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].first == name) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

bool PanelFrame::has_column(std::string_view name) const { return find(name) >= 0; }

std::span<const double> PanelFrame::column(std::string_view name) const {
  const auto i = find(name);
  if (i < 0) throw SchemaError("unknown column '" + std::string(name) + "'");
  return *columns_[static_cast<std::size_t>(i)].second;
}

std::vector<std::string> PanelFrame::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& [name, _] : columns_) out.push_back(name);
  return out;
}

PanelFrame PanelFrame::with_column(std::string name, std::vector<double> values) const {
  if (values.size() != rows()) {
    throw SchemaError("column '" + name + "' has " + std::to_string(values.size()) + " cells, frame has " +
                      std::to_string(rows()) + " rows");
  }
  if (name.empty() || name == "id" || name == "date") throw SchemaError("reserved column name '" + name + "'");
  PanelFrame out = *this;
  auto ptr = std::make_shared<const std::vector<double>>(std::move(values));
  const auto i = find(name);
  if (i >= 0) {
    out.columns_[static_cast<std::size_t>(i)].second = std::move(ptr);
  } else {
    out.columns_.emplace_back(std::move(name), std::move(ptr));
  }
  return out;
}

PanelFrame PanelFrame::without_column(std::string_view name) const {
  const auto i = find(name);
  if (i < 0) throw SchemaError("unknown column '" + std::string(name) + "'");
  PanelFrame out = *this;
  out.columns_.erase(out.columns_.begin() + i);
  return out;
}

PanelFrame PanelFrame::select(std::span<const std::string> names) const {
  PanelFrame out;
  out.keys_ = keys_;
  for (const auto& name : names) {
    const auto i = find(name);
    if (i < 0) throw SchemaError("unknown column '" + name + "'");
    out.columns_.push_back(columns_[static_cast<std::size_t>(i)]);
  }
  return out;
}

bool PanelFrame::same_keys(const PanelFrame& other) const {
  if (keys_ == other.keys_) return true;
  return keys_->assets == other.keys_->assets && keys_->offsets == other.keys_->offsets &&
         keys_->dates == other.keys_->dates;
}

Table PanelFrame::to_table() const {
  Table t;
  t.ids.reserve(rows());
  for (std::size_t r = 0; r < rows(); ++r) t.ids.push_back(id(r));
  t.dates = keys_->dates;
  for (const auto& [name, col] : columns_) t.columns.push_back({name, *col});
  return t;
}

bool identical(const PanelFrame& a, const PanelFrame& b) {
  if (!a.same_keys(b) || a.column_names() != b.column_names()) return false;
  for (const auto& name : a.column_names()) {
    const auto x = a.column(name);
    const auto y = b.column(name);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!same_bits(x[i], y[i])) return false;
    }
  }
  return true;
}

std::vector<std::vector<std::size_t>> cross_sections(const PanelFrame& frame) {
  std::vector<std::size_t> order(frame.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto dates = frame.dates();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });

  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || dates[order[i]] != dates[order[i - 1]]) groups.emplace_back();
    groups.back().push_back(order[i]);
  }
  return groups;
}

std::span<const std::string_view> canonical_columns() { return kCanonical; }

bool is_canonical_column(std::string_view name) {
  return std::find(kCanonical.begin(), kCanonical.end(), name) != kCanonical.end();
}

bool is_accounting_column(std::string_view name) {
  return std::find(kAccounting.begin(), kAccounting.end(), name) != kAccounting.end();
}

void ColumnSchema::validate() const {
  if (id_col.empty()) throw SchemaError("schema is missing id_col");
  if (date_col.empty()) throw SchemaError("schema is missing date_col");
  std::set<std::string_view> seen;
  for (const auto& m : mappings) {
    if (m.source.empty() || m.canonical.empty()) throw SchemaError("schema mapping with empty name");
    if (m.canonical == "id" || m.canonical == "date") {
      throw SchemaError("canonical name '" + m.canonical + "' collides with a key column");
    }
    if (!seen.insert(m.canonical).second) throw SchemaError("canonical name '" + m.canonical + "' mapped twice");
  }
}

ColumnSchema ColumnSchema::identity(std::span<const std::string> headers, std::string id_col, std::string date_col) {
  ColumnSchema schema{std::move(id_col), std::move(date_col), {}};
  for (const auto& h : headers) {
    if (h != schema.id_col && h != schema.date_col) schema.mappings.push_back({h, h});
  }
  return schema;
}

}  // namespace fe
