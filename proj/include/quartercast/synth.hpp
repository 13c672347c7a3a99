#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "quartercast/calendar.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

struct SynthGeo {
  double base = 1000.0;
  double slope = 0.3;       // relative growth over the whole sample
  double amplitude = 60.0;  // scales the seasonal pattern
  double noise = 10.0;      // standard deviation of additive noise
};

/// revenue_t = (base (1 + slope t/n) + amplitude s(t mod 4)) (I_t / I_0)^linkage + noise_t
/// where I is the geography's indicator (log-linear growth plus a cycle).
/// With linkage 0 the indicator is still generated but does not feed revenue.
struct SynthSpec {
  int n_geos = 6;
  int n_quarters = 28;
  FiscalQuarter first{2009, 1};
  std::vector<SynthGeo> geos;  // entries beyond its size use default_synth_geo()
  std::array<double, 4> season{1.0, -0.5, -1.0, 0.5};
  double linkage = 0.0;
  bool with_indicator = true;
  std::string indicator = "gdp";
  double indicator_growth = 0.01;  // log growth per quarter
  double indicator_cycle = 0.08;   // amplitude of the log cycle
  int cycle_period = 12;
  double floor = 1.0;  // revenue below this is clamped
  std::uint64_t seed = 1;
};

SynthGeo default_synth_geo(int index);

struct SyntheticData {
  Dataset dataset;
  long floor_clamps = 0;
};

/// Pure function of the spec. Geography ids are Geo_1 .. Geo_n; indicators
/// start four quarters before revenue so YoY growth exists from the first
/// revenue quarter, and TOTAL's indicator is the sum over geographies.
SyntheticData generate_synthetic(const SynthSpec& spec);

SynthSpec parse_synth_spec(std::string_view json_text);

}  // namespace quartercast
