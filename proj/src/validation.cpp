#include "fe/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include <json.hpp>

namespace fe {

namespace {

const FactorFile& normalized(const FactorFile& file, FactorFile& storage) {
  const bool sorted = std::is_sorted(file.rows.begin(), file.rows.end(), [](const FactorRow& a, const FactorRow& b) {
    return std::tie(a.factor, a.id, a.date) < std::tie(b.factor, b.id, b.date);
  });
  if (sorted) return file;
  storage = file;
  storage.normalize();
  return storage;
}

std::string format_r(double r) {
  if (is_null(r)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", r);
  return buf;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double sa = 0, sb = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_null(a[i]) || is_null(b[i])) continue;
    sa += a[i];
    sb += b[i];
    ++k;
  }
  if (k < 2) return null_value;
  const double ma = sa / static_cast<double>(k);
  const double mb = sb / static_cast<double>(k);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_null(a[i]) || is_null(b[i])) continue;
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return null_value;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

ValidationReport validate(const FactorFile& ours_in, const FactorFile& reference_in) {
  FactorFile s1, s2;
  const auto& ours = normalized(ours_in, s1).rows;
  const auto& ref = normalized(reference_in, s2).rows;

  const auto our_names = ours_in.factors();
  const auto ref_names = reference_in.factors();
  ValidationReport report;
  std::set_difference(our_names.begin(), our_names.end(), ref_names.begin(), ref_names.end(),
                      std::back_inserter(report.only_ours));
  std::set_difference(ref_names.begin(), ref_names.end(), our_names.begin(), our_names.end(),
                      std::back_inserter(report.only_reference));
  std::vector<std::string> shared;
  std::set_intersection(our_names.begin(), our_names.end(), ref_names.begin(), ref_names.end(),
                        std::back_inserter(shared));

  std::size_t i = 0, j = 0;
  for (const auto& factor : shared) {
    std::vector<double> a, b;
    while (i < ours.size() && ours[i].factor < factor) ++i;
    while (j < ref.size() && ref[j].factor < factor) ++j;
    while (i < ours.size() && j < ref.size() && ours[i].factor == factor && ref[j].factor == factor) {
      const auto ka = std::tie(ours[i].id, ours[i].date);
      const auto kb = std::tie(ref[j].id, ref[j].date);
      if (ka < kb) {
        ++i;
      } else if (kb < ka) {
        ++j;
      } else {
        if (!is_null(ours[i].value) && !is_null(ref[j].value)) {
          a.push_back(ours[i].value);
          b.push_back(ref[j].value);
        }
        ++i;
        ++j;
      }
    }
    report.compared.push_back({factor, pearson(a, b), a.size()});
  }
  return report;
}

std::string format_validation_table(const ValidationReport& report) {
  std::size_t width = 6;
  for (const auto& c : report.compared) width = std::max(width, c.factor.size());
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };

  std::string out = pad("Factor") + " | Pearson Correlation\n";
  out += std::string(width, '-') + "-+--------------------\n";
  for (const auto& c : report.compared) out += pad(c.factor) + " | " + format_r(c.r) + "\n";
  auto list = [&](const char* label, const std::vector<std::string>& names) {
    if (names.empty()) return;
    out += label;
    for (std::size_t k = 0; k < names.size(); ++k) out += (k ? ", " : " ") + names[k];
    out += "\n";
  };
  list("uncompared (ours only):", report.only_ours);
  list("uncompared (reference only):", report.only_reference);
  return out;
}

std::string validation_json(const ValidationReport& report) {
  nlohmann::ordered_json j;
  j["factors"] = nlohmann::ordered_json::array();
  for (const auto& c : report.compared) {
    nlohmann::ordered_json row;
    row["factor"] = c.factor;
    row["pearson"] = is_null(c.r) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.r);
    row["observations"] = c.observations;
    j["factors"].push_back(std::move(row));
  }
  j["only_ours"] = report.only_ours;
  j["only_reference"] = report.only_reference;
  double min_r = null_value;
  for (const auto& c : report.compared) {
    if (!is_null(c.r)) min_r = is_null(min_r) ? c.r : std::min(min_r, c.r);
  }
  j["summary"]["compared"] = report.compared.size();
  j["summary"]["min_pearson"] = is_null(min_r) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(min_r);
  return j.dump(2) + "\n";
}

}  // namespace fe
