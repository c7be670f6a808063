#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fe/factor_file.hpp"

namespace fe {

// Pearson correlation over the pairs where both sides are non-null. Null
// when fewer than two pairs survive or either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

struct FactorComparison {
  std::string factor;
  double r = null_value;
  std::size_t observations = 0;  // pairs with both values non-null
};

struct ValidationReport {
  std::vector<FactorComparison> compared;  // sorted by factor name
  std::vector<std::string> only_ours;
  std::vector<std::string> only_reference;
};

// Inner join on (id, date, factor).
ValidationReport validate(const FactorFile& ours, const FactorFile& reference);

// Two-column text table, r to four decimals ("null" when undefined).
std::string format_validation_table(const ValidationReport& report);
std::string validation_json(const ValidationReport& report);

}  // namespace fe
