#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fe/date.hpp"
#include "fe/panel.hpp"

namespace fe {

// Long-format factor values: header `id,date,factor,value`, one row per
// (id, date, factor), null written as an empty field.
struct FactorRow {
  std::string id;
  Date date;
  std::string factor;
  double value = null_value;
};

struct FactorFile {
  std::vector<FactorRow> rows;

  // Orders rows by (factor, id, date). Throws IntegrityError on a repeated key.
  void normalize();
  std::vector<std::string> factors() const;
};

// One row per frame row and listed column.
FactorFile factor_file_from_frame(const PanelFrame& frame, std::span<const std::string> columns);

// Wide frame with one column per factor, null where a file has no row.
PanelFrame factor_file_to_frame(const FactorFile& file);

// Writes in normalized order with shortest round-trip numbers.
void write_factor_file(std::ostream& out, const FactorFile& file);
void write_factor_file(const std::filesystem::path& path, const FactorFile& file);

// Throws ParseError (with line number) on a bad header, date, number or
// repeated key.
FactorFile parse_factor_file(std::string_view text);
FactorFile read_factor_file(const std::filesystem::path& path);

}  // namespace fe
