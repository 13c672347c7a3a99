#include "quartercast/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "quartercast/error.hpp"

namespace quartercast {

namespace {

// Box-Muller on 53-bit uniforms: std::normal_distribution is not specified
// bit for bit across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * std::numbers::pi * u2);
    spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool spare_ = false;
  double cached_ = 0.0;
};

std::string geo_id(int i) { return "Geo_" + std::to_string(i + 1); }

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::validation, "synthetic spec: " + what);
}

}  // namespace

SynthGeo default_synth_geo(int index) {
  SynthGeo g;
  g.base = 1000.0 + 350.0 * index;
  g.slope = 0.25 + 0.05 * (index % 3);
  g.amplitude = 0.06 * g.base;
  g.noise = 0.01 * g.base;
  return g;
}

SyntheticData generate_synthetic(const SynthSpec& spec) {
  check(spec.n_geos >= 1, "n_geos must be at least 1");
  check(spec.n_quarters >= 24, "n_quarters must be at least 24");
  check(spec.cycle_period >= 2, "cycle_period must be at least 2");
  check(spec.floor > 0.0, "floor must be positive");

  SyntheticData out;
  Gaussian gauss(spec.seed);
  const int n = spec.n_quarters;
  const int lead = 4;
  const FiscalQuarter indicator_first = quarter_add(spec.first, -lead);

  std::map<std::string, QuarterlySeries> revenue;
  std::map<IndicatorKey, QuarterlySeries> indicators;
  Eigen::VectorXd total_indicator = Eigen::VectorXd::Zero(n + lead);

  for (int g = 0; g < spec.n_geos; ++g) {
    const SynthGeo p = g < static_cast<int>(spec.geos.size()) ? spec.geos[static_cast<std::size_t>(g)]
                                                               : default_synth_geo(g);
    check(p.base > 0.0 && p.noise >= 0.0, "geography base must be positive and noise non-negative");

    const double phase = 0.2 * g;
    Eigen::VectorXd ind(n + lead);
    for (int k = 0; k < n + lead; ++k) {
      const double t = k - lead;
      ind[k] = 100.0 * std::exp(spec.indicator_growth * t +
                                spec.indicator_cycle * std::sin(2.0 * std::numbers::pi * t / spec.cycle_period + phase));
    }

    Eigen::VectorXd y(n);
    for (int t = 0; t < n; ++t) {
      const double shape = p.base * (1.0 + p.slope * t / n) + p.amplitude * spec.season[static_cast<std::size_t>(t % 4)];
      const double link = spec.linkage == 0.0 ? 1.0 : std::pow(ind[t + lead] / ind[lead], spec.linkage);
      y[t] = shape * link + p.noise * gauss();
      if (y[t] < spec.floor) {
        y[t] = spec.floor;
        ++out.floor_clamps;
      }
    }
    revenue.emplace(geo_id(g), QuarterlySeries(geo_id(g), spec.first, std::move(y)));
    if (spec.with_indicator) {
      total_indicator += ind;
      indicators.emplace(IndicatorKey{geo_id(g), spec.indicator}, QuarterlySeries(geo_id(g), indicator_first, ind));
    }
  }
  if (spec.with_indicator) {
    indicators.emplace(IndicatorKey{kTotalId, spec.indicator},
                       QuarterlySeries(kTotalId, indicator_first, std::move(total_indicator)));
  }
  out.dataset = make_dataset(std::move(revenue), std::nullopt, std::move(indicators));
  return out;
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  using nlohmann::json;
  SynthSpec spec;
  try {
    const json doc = json::parse(json_text);
    for (const auto& [key, value] : doc.items()) {
      if (key == "n_geos") spec.n_geos = value.get<int>();
      else if (key == "n_quarters") spec.n_quarters = value.get<int>();
      else if (key == "first") spec.first = parse_quarter(value.get<std::string>());
      else if (key == "season") spec.season = value.get<std::array<double, 4>>();
      else if (key == "linkage") spec.linkage = value.get<double>();
      else if (key == "with_indicator") spec.with_indicator = value.get<bool>();
      else if (key == "indicator") spec.indicator = value.get<std::string>();
      else if (key == "indicator_growth") spec.indicator_growth = value.get<double>();
      else if (key == "indicator_cycle") spec.indicator_cycle = value.get<double>();
      else if (key == "cycle_period") spec.cycle_period = value.get<int>();
      else if (key == "floor") spec.floor = value.get<double>();
      else if (key == "seed") spec.seed = value.get<std::uint64_t>();
      else if (key == "geos") {
        for (const auto& g : value) {
          SynthGeo geo = default_synth_geo(static_cast<int>(spec.geos.size()));
          geo.base = g.value("base", geo.base);
          geo.slope = g.value("slope", geo.slope);
          geo.amplitude = g.value("amplitude", geo.amplitude);
          geo.noise = g.value("noise", geo.noise);
          spec.geos.push_back(geo);
        }
      } else {
        throw Error(ErrorKind::validation, "unknown synthetic spec key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed synthetic spec: ") + e.what());
  }
  return spec;
}

}  // namespace quartercast
