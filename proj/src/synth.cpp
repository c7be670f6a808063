#include "fe/synth.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fe/error.hpp"

namespace fe {

namespace {

// Uniform and normal draws built on the raw engine output so that results
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool chance(double p) { return uniform() < p; }

  double normal() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    spare_ = true;
    return r * std::cos(theta);
  }
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  bool spare_ = false;
  double cached_ = 0;
};

struct Firm {
  double price, shares;
  double ta, lev, ca_r, cash_r, cl_r, std_r, ltd_r, txp_r, ppe_r, inv_r, gp_r, roa, dp_r;
  // Reported (quarter-end) accounting values.
  double ta_q, tl_q, ca_q, cash_q, cl_q, std_q, ltd_q, txp_q, dp_q, ppe_q, inv_q, gp_q, ni_q, ibq_q, ceq_q;
};

void report_quarter(Firm& f, Rng& rng) {
  f.ta_q = f.ta;
  f.tl_q = f.ta * f.lev;
  f.ca_q = f.ta * f.ca_r;
  f.cash_q = f.ca_q * f.cash_r;
  f.cl_q = f.ta * f.cl_r;
  f.std_q = f.cl_q * f.std_r;
  f.ltd_q = std::max(0.0, f.tl_q - f.cl_q) * f.ltd_r;
  f.txp_q = f.cl_q * f.txp_r;
  f.dp_q = f.ta * f.dp_r;
  f.ppe_q = f.ta * f.ppe_r;
  f.inv_q = f.ca_q * f.inv_r;
  f.gp_q = f.ta * f.gp_r;
  f.ni_q = f.ta * f.roa;
  f.ibq_q = f.ni_q * rng.uniform(0.9, 1.0);
  f.ceq_q = f.ta_q - f.tl_q;
}

double drift(Rng& rng, double x, double sd, double lo, double hi) {
  return std::clamp(x + rng.normal(0.0, sd), lo, hi);
}

Date month_end(Date start, std::size_t m) {
  const std::chrono::year_month_day ymd{start};
  const auto ym = std::chrono::year_month{ymd.year(), ymd.month()} + std::chrono::months(static_cast<int>(m));
  return std::chrono::sys_days{ym / std::chrono::last};
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& config) {
  if (config.assets == 0 || config.months == 0) throw ParameterError("synthetic panel needs assets and months");
  if (!(config.null_rate >= 0.0 && config.null_rate < 1.0) || !(config.gap_rate >= 0.0 && config.gap_rate < 1.0)) {
    throw ParameterError("null_rate and gap_rate must be in [0, 1)");
  }
  Rng rng(config.seed);

  std::vector<Firm> firms(config.assets);
  for (auto& f : firms) {
    f.price = rng.uniform(3.0, 120.0);
    f.shares = rng.uniform(10.0, 500.0);
    f.ta = std::exp(rng.uniform(std::log(50.0), std::log(50000.0)));
    f.lev = rng.uniform(0.2, 0.95);
    f.ca_r = rng.uniform(0.2, 0.6);
    f.cash_r = rng.uniform(0.05, 0.5);
    f.cl_r = rng.uniform(0.1, 0.4);
    f.std_r = rng.uniform(0.05, 0.4);
    f.ltd_r = rng.uniform(0.3, 0.9);
    f.txp_r = rng.uniform(0.01, 0.1);
    f.ppe_r = rng.uniform(0.1, 0.7);
    f.inv_r = rng.uniform(0.05, 0.4);
    f.gp_r = rng.uniform(0.02, 0.12);
    f.roa = rng.normal(0.005, 0.02);
    f.dp_r = rng.uniform(0.003, 0.015);
    report_quarter(f, rng);
  }

  const std::vector<std::string_view> columns(canonical_columns().begin(), canonical_columns().end());
  const int width = static_cast<int>(std::to_string(config.assets).size());
  std::vector<std::string> ids(config.assets);
  for (std::size_t a = 0; a < config.assets; ++a) {
    std::string n = std::to_string(a + 1);
    ids[a] = "A" + std::string(static_cast<std::size_t>(width) - n.size(), '0') + n;
  }

  Table t;
  t.columns.reserve(columns.size());
  for (const auto c : columns) t.columns.push_back({std::string(c), {}});
  SeriesTable index;
  std::vector<double> index_ret, index_mv;

  std::vector<double> row(columns.size());
  for (std::size_t m = 0; m < config.months; ++m) {
    const Date d = month_end(config.start, m);
    const bool quarter_end = (static_cast<unsigned>(std::chrono::year_month_day{d}.month()) % 3) == 0;
    double weighted = 0, prev_total = 0, total = 0;

    for (std::size_t a = 0; a < config.assets; ++a) {
      auto& f = firms[a];
      const double prev_mv = f.price * f.shares;
      const double ret = std::exp(rng.normal(0.006, 0.09)) - 1.0;
      f.price *= 1.0 + ret;
      if (rng.chance(0.06)) f.shares *= std::exp(rng.normal(0.01, 0.06));
      f.ta *= std::exp(rng.normal(0.004, 0.03));
      f.roa = drift(rng, f.roa, 0.006, -0.2, 0.2);
      if (quarter_end) {
        f.lev = drift(rng, f.lev, 0.02, 0.05, 1.3);
        f.ca_r = drift(rng, f.ca_r, 0.02, 0.05, 0.9);
        f.cash_r = drift(rng, f.cash_r, 0.02, 0.01, 0.9);
        f.cl_r = drift(rng, f.cl_r, 0.015, 0.02, 0.8);
        f.ppe_r = drift(rng, f.ppe_r, 0.02, 0.02, 0.9);
        f.inv_r = drift(rng, f.inv_r, 0.02, 0.0, 0.8);
        f.gp_r = drift(rng, f.gp_r, 0.005, -0.05, 0.3);
        report_quarter(f, rng);
      }
      const double mv = f.price * f.shares;
      weighted += prev_mv * ret;
      prev_total += prev_mv;
      total += mv;

      if (rng.chance(config.gap_rate)) continue;
      const double ni = f.ni_q;
      const double values[] = {mv,       ret,      f.price,  f.shares, f.ta_q,  f.ibq_q,  f.gp_q,
                               f.cash_q, f.ca_q,   f.cl_q,   f.std_q,  f.ltd_q, f.txp_q,  f.dp_q,
                               f.ppe_q,  f.inv_q,  ni,       f.tl_q,   f.ceq_q, ni + f.dp_q};
      static_assert(std::size(values) == 20);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        row[c] = rng.chance(config.null_rate) ? null_value : values[c];
      }
      t.ids.push_back(ids[a]);
      t.dates.push_back(d);
      for (std::size_t c = 0; c < columns.size(); ++c) t.columns[c].values.push_back(row[c]);
    }
    index.dates.push_back(d);
    index_ret.push_back(weighted / prev_total);
    index_mv.push_back(total);
  }
  index.columns["ret"] = std::move(index_ret);
  index.columns["mv"] = std::move(index_mv);
  return {PanelFrame::from_table(std::move(t)), std::move(index)};
}

}  // namespace fe
