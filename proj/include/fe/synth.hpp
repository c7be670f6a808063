#pragma once

#include <cstddef>
#include <cstdint>

#include "fe/date.hpp"
#include "fe/io.hpp"
#include "fe/panel.hpp"

namespace fe {

struct SynthConfig {
  std::size_t assets = 100;
  std::size_t months = 120;
  std::uint64_t seed = 42;
  Date start = make_date(2010, 1, 31);
  // Probability that a single cell is null.
  double null_rate = 0.01;
  // Probability that an (asset, month) row is missing altogether.
  double gap_rate = 0.01;
};

// Month-end panel with every canonical column, plus an index table with
// value-weighted `ret` and total `mv` of the generated universe.
// Accounting items change at quarter ends only; ffo = ni + dp.
// Output depends only on the config (portable generator, no std
// distributions).
struct SynthData {
  PanelFrame panel;
  SeriesTable index;
};

SynthData generate_synthetic(const SynthConfig& config);

}  // namespace fe
