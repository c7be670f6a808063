#include "fe/factor_file.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "fe/error.hpp"
#include "fe/io.hpp"

namespace fe {

namespace {

bool key_less(const FactorRow& a, const FactorRow& b) {
  return std::tie(a.factor, a.id, a.date) < std::tie(b.factor, b.id, b.date);
}

bool key_equal(const FactorRow& a, const FactorRow& b) {
  return a.factor == b.factor && a.id == b.id && a.date == b.date;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void FactorFile::normalize() {
  std::stable_sort(rows.begin(), rows.end(), key_less);
  const auto dup = std::adjacent_find(rows.begin(), rows.end(), key_equal);
  if (dup != rows.end()) {
    throw IntegrityError("factor file repeats (" + dup->id + ", " + format_date(dup->date) + ", " + dup->factor + ")");
  }
}

std::vector<std::string> FactorFile::factors() const {
  std::set<std::string> names;
  for (const auto& r : rows) names.insert(r.factor);
  return {names.begin(), names.end()};
}

FactorFile factor_file_from_frame(const PanelFrame& frame, std::span<const std::string> columns) {
  FactorFile file;
  file.rows.reserve(frame.rows() * columns.size());
  for (const auto& c : columns) {
    const auto values = frame.column(c);
    for (std::size_t r = 0; r < frame.rows(); ++r) file.rows.push_back({frame.id(r), frame.date(r), c, values[r]});
  }
  file.normalize();
  return file;
}

PanelFrame factor_file_to_frame(const FactorFile& file) {
  std::map<std::pair<std::string, Date>, std::size_t> index;
  for (const auto& r : file.rows) index.emplace(std::pair{r.id, r.date}, 0);
  Table t;
  for (auto& [key, i] : index) {
    i = t.ids.size();
    t.ids.push_back(key.first);
    t.dates.push_back(key.second);
  }
  const auto names = file.factors();
  std::map<std::string, std::size_t, std::less<>> col_of;
  for (const auto& n : names) {
    col_of[n] = t.columns.size();
    t.columns.push_back({n, std::vector<double>(t.ids.size(), null_value)});
  }
  for (const auto& r : file.rows) {
    t.columns[col_of.find(r.factor)->second].values[index.at({r.id, r.date})] = r.value;
  }
  return PanelFrame::from_table(std::move(t));
}

void write_factor_file(std::ostream& out, const FactorFile& file) {
  const FactorFile* sorted = &file;
  FactorFile copy;
  if (!std::is_sorted(file.rows.begin(), file.rows.end(), key_less)) {
    copy = file;
    copy.normalize();
    sorted = &copy;
  }
  out << "id,date,factor,value\n";
  for (const auto& r : sorted->rows) {
    out << csv_field(r.id) << ',' << format_date(r.date) << ',' << csv_field(r.factor) << ','
        << format_number(r.value) << '\n';
  }
}

void write_factor_file(const std::filesystem::path& path, const FactorFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_factor_file(out, file);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FactorFile parse_factor_file(std::string_view text) {
  const CsvDocument doc = parse_csv(text);
  const std::vector<std::string> expected{"id", "date", "factor", "value"};
  if (doc.header != expected) throw ParseError("factor file header must be id,date,factor,value", 1);

  FactorFile file;
  file.rows.reserve(doc.rows.size());
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    const auto& cells = doc.rows[i];
    const auto line = doc.lines[i];
    if (cells[0].empty()) throw ParseError("empty id", line);
    if (cells[2].empty()) throw ParseError("empty factor name", line);
    const auto date = parse_date(cells[1]);
    if (!date) throw ParseError("bad date '" + cells[1] + "'", line);
    double v = 0;
    if (!parse_cell(cells[3], v)) throw ParseError("bad value '" + cells[3] + "'", line);
    file.rows.push_back({cells[0], *date, cells[2], v});
  }

  std::vector<std::size_t> order(file.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key_less(file.rows[a], file.rows[b]); });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (key_equal(file.rows[order[i - 1]], file.rows[order[i]])) {
      throw ParseError("repeated (id, date, factor) key", doc.lines[std::max(order[i - 1], order[i])]);
    }
  }
  std::vector<FactorRow> sorted;
  sorted.reserve(order.size());
  for (const auto i : order) sorted.push_back(std::move(file.rows[i]));
  file.rows = std::move(sorted);
  return file;
}

FactorFile read_factor_file(const std::filesystem::path& path) { return parse_factor_file(read_text_file(path)); }

}  // namespace fe
