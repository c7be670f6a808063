#include "fe/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fe/error.hpp"

namespace fe {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvDocument parse_csv(std::string_view text) {
  CsvDocument doc;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool in_quotes = false;
  bool field_started = false;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (doc.header.empty()) {
        doc.header = std::move(record);
      } else {
        if (record.size() != doc.header.size()) {
          throw ParseError("expected " + std::to_string(doc.header.size()) + " fields, found " +
                               std::to_string(record.size()),
                           record_line);
        }
        doc.rows.push_back(std::move(record));
        doc.lines.push_back(record_line);
      }
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) throw ParseError("stray quote inside field", line);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", record_line);
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (doc.header.empty()) throw ParseError("missing header row", 1);
  // Tolerate a UTF-8 byte order mark.
  if (doc.header[0].rfind("\xEF\xBB\xBF", 0) == 0) doc.header[0].erase(0, 3);
  return doc;
}

CsvDocument read_csv_file(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

bool parse_cell(std::string_view text, double& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty() || text == "NA" || text == "NaN" || text == "nan" || text == "null" || text == "NULL") {
    out = null_value;
    return true;
  }
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return false;
  if (std::isnan(out)) out = null_value;
  return true;
}

namespace {

std::size_t header_index(const CsvDocument& doc, std::string_view name) {
  const auto it = std::find(doc.header.begin(), doc.header.end(), name);
  if (it == doc.header.end()) throw SchemaError("input is missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - doc.header.begin());
}

}  // namespace

PanelFrame ingest(const CsvDocument& doc, const ColumnSchema& schema) {
  schema.validate();
  const std::size_t id_idx = header_index(doc, schema.id_col);
  const std::size_t date_idx = header_index(doc, schema.date_col);
  std::vector<std::size_t> value_idx;
  for (const auto& m : schema.mappings) value_idx.push_back(header_index(doc, m.source));

  Table table;
  const std::size_t n = doc.rows.size();
  table.ids.reserve(n);
  table.dates.reserve(n);
  for (const auto& m : schema.mappings) {
    table.columns.push_back({m.canonical, {}});
    table.columns.back().values.reserve(n);
  }

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = doc.rows[r];
    const std::size_t line = doc.lines[r];
    if (row[id_idx].empty()) throw ParseError("empty asset id in row " + std::to_string(r), line);
    const auto date = parse_date(row[date_idx]);
    if (!date) throw ParseError("unparseable date '" + row[date_idx] + "' in row " + std::to_string(r), line);
    table.ids.push_back(row[id_idx]);
    table.dates.push_back(*date);
    for (std::size_t c = 0; c < value_idx.size(); ++c) {
      double v = 0;
      if (!parse_cell(row[value_idx[c]], v)) {
        throw ParseError("unparseable number '" + row[value_idx[c]] + "' in column '" +
                             schema.mappings[c].source + "', row " + std::to_string(r),
                         line);
      }
      table.columns[c].values.push_back(v);
    }
  }
  return PanelFrame::from_table(std::move(table));
}

PanelFrame ingest_csv(std::string_view text, const ColumnSchema& schema) { return ingest(parse_csv(text), schema); }

PanelFrame ingest_file(const std::filesystem::path& path, const ColumnSchema& schema) {
  if (is_panel_binary(path)) {
    // Binary panels are already canonical; the schema only selects and renames.
    const PanelFrame raw = read_panel_binary(path);
    if (schema.mappings.empty()) return raw;
    PanelFrame out = raw.select(std::vector<std::string>{});
    for (const auto& m : schema.mappings) {
      if (!raw.has_column(m.source)) throw SchemaError("input is missing column '" + m.source + "'");
      const auto col = raw.column(m.source);
      out = out.with_column(m.canonical, std::vector<double>(col.begin(), col.end()));
    }
    return out;
  }
  return ingest(read_csv_file(path), schema);
}

std::string format_number(double v) {
  if (is_null(v)) return {};
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_panel_csv(std::ostream& out, const PanelFrame& frame) {
  const auto names = frame.column_names();
  out << "id,date";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  std::vector<std::span<const double>> cols;
  for (const auto& n : names) cols.push_back(frame.column(n));
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out << frame.id(r) << ',' << format_date(frame.date(r));
    for (const auto& c : cols) out << ',' << format_number(c[r]);
    out << '\n';
  }
}

namespace {

constexpr char kMagic[8] = {'F', 'E', 'P', 'A', 'N', 'E', 'L', '1'};

static_assert(std::endian::native == std::endian::little, "binary panel I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("truncated binary panel");
  return v;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw ParseError("truncated binary panel");
  return s;
}

}  // namespace

bool is_panel_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  return in && std::memcmp(magic, kMagic, sizeof kMagic) == 0;
}

void write_panel_binary(const std::filesystem::path& path, const PanelFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, frame.rows());
  put<std::uint64_t>(out, frame.asset_count());
  for (std::size_t a = 0; a < frame.asset_count(); ++a) {
    put_string(out, frame.asset_ids()[a]);
    put<std::uint64_t>(out, frame.asset_rows(a).second - frame.asset_rows(a).first);
  }
  for (const Date d : frame.dates()) put<std::int32_t>(out, static_cast<std::int32_t>(d.time_since_epoch().count()));
  const auto names = frame.column_names();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(names.size()));
  for (const auto& n : names) {
    put_string(out, n);
    const auto col = frame.column(n);
    out.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(col.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PanelFrame read_panel_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ParseError("not a binary panel file");
  const auto rows = get<std::uint64_t>(in);
  const auto assets = get<std::uint64_t>(in);

  Table table;
  table.ids.reserve(rows);
  for (std::uint64_t a = 0; a < assets; ++a) {
    const auto id = get_string(in);
    const auto count = get<std::uint64_t>(in);
    table.ids.insert(table.ids.end(), count, id);
  }
  if (table.ids.size() != rows) throw ParseError("binary panel row counts disagree");
  table.dates.reserve(rows);
  for (std::uint64_t r = 0; r < rows; ++r) table.dates.push_back(Date{std::chrono::days{get<std::int32_t>(in)}});
  const auto ncols = get<std::uint32_t>(in);
  for (std::uint32_t c = 0; c < ncols; ++c) {
    NamedColumn col{get_string(in), std::vector<double>(rows)};
    in.read(reinterpret_cast<char*>(col.values.data()), static_cast<std::streamsize>(rows * sizeof(double)));
    if (!in) throw ParseError("truncated binary panel");
    table.columns.push_back(std::move(col));
  }
  return PanelFrame::from_table(std::move(table));
}

SeriesTable parse_series_csv(std::string_view text, std::string_view date_col) {
  const CsvDocument doc = parse_csv(text);
  const std::size_t date_idx = header_index(doc, date_col);
  SeriesTable out;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    if (c != date_idx) out.columns[doc.header[c]].reserve(doc.rows.size());
  }
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const auto date = parse_date(row[date_idx]);
    if (!date) throw ParseError("unparseable date '" + row[date_idx] + "'", doc.lines[r]);
    if (!out.dates.empty() && *date <= out.dates.back()) {
      throw ParseError("series dates must be strictly increasing", doc.lines[r]);
    }
    out.dates.push_back(*date);
    for (std::size_t c = 0; c < doc.header.size(); ++c) {
      if (c == date_idx) continue;
      double v = 0;
      if (!parse_cell(row[c], v)) throw ParseError("unparseable number '" + row[c] + "'", doc.lines[r]);
      out.columns[doc.header[c]].push_back(v);
    }
  }
  return out;
}

SeriesTable read_series_csv(const std::filesystem::path& path, std::string_view date_col) {
  return parse_series_csv(read_text_file(path), date_col);
}

void write_series_csv(std::ostream& out, const SeriesTable& table) {
  out << "date";
  for (const auto& [name, _] : table.columns) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < table.dates.size(); ++r) {
    out << format_date(table.dates[r]);
    for (const auto& [_, values] : table.columns) out << ',' << format_number(values[r]);
    out << '\n';
  }
}

}  // namespace fe
