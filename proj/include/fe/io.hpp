#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fe/panel.hpp"

namespace fe {

// Header plus string cells of a comma-delimited file. Supports RFC 4180
// double-quoted fields.
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Source line (1-based) of each row, for error messages.
  std::vector<std::size_t> lines;
};

CsvDocument parse_csv(std::string_view text);
CsvDocument read_csv_file(const std::filesystem::path& path);

// Numeric cell: empty, "NA", "NaN", "nan", "null" and "NULL" read as null.
// Returns false when the text is not a number.
bool parse_cell(std::string_view text, double& out);

// Applies the schema: selects and renames the mapped columns, parses dates
// and numbers, sorts by (id, date). Errors: SchemaError (missing column),
// ParseError (bad date or number, with its line), IntegrityError (duplicate key).
PanelFrame ingest(const CsvDocument& doc, const ColumnSchema& schema);
PanelFrame ingest_csv(std::string_view text, const ColumnSchema& schema);
PanelFrame ingest_file(const std::filesystem::path& path, const ColumnSchema& schema);

void write_panel_csv(std::ostream& out, const PanelFrame& frame);

// Columnar binary format (".fepanel"): little-endian, magic "FEPANEL1",
// then asset ids, per-asset row offsets, day numbers and named columns.
// Column names are stored canonical; reading applies no schema.
void write_panel_binary(const std::filesystem::path& path, const PanelFrame& frame);
PanelFrame read_panel_binary(const std::filesystem::path& path);
bool is_panel_binary(const std::filesystem::path& path);

// Date-indexed auxiliary series (for example an index's returns and total
// market value). Dates strictly increasing.
struct SeriesTable {
  std::vector<Date> dates;
  std::map<std::string, std::vector<double>, std::less<>> columns;

  bool has_column(std::string_view name) const { return columns.find(name) != columns.end(); }
};

// Expects a `date` header (or `date_col`) and numeric remaining columns.
SeriesTable read_series_csv(const std::filesystem::path& path, std::string_view date_col = "date");
SeriesTable parse_series_csv(std::string_view text, std::string_view date_col = "date");
void write_series_csv(std::ostream& out, const SeriesTable& table);

// Shortest text that round-trips the double exactly; null becomes "".
std::string format_number(double v);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fe
