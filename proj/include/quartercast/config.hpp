#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "quartercast/calendar.hpp"
#include "quartercast/features.hpp"
#include "quartercast/forest.hpp"
#include "quartercast/io.hpp"
#include "quartercast/pipeline.hpp"

namespace quartercast {

struct RunConfig {
  ModelId model = ModelId::m2;
  std::optional<QuarterRange> train;  // default: first revenue quarter to test.first - 1
  std::optional<QuarterRange> test;
  std::optional<std::uint64_t> seed;  // required for m2 and m3
  ForestParams forest;                // seed and threads are taken from elsewhere
  FeatureConfig features;
  Model1Options model1;
  std::optional<OutputFormat> output;  // unset: --format, then the --out extension
};

/// Reads the JSON config; unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text);

/// Fills the default training range and checks the run is well formed.
RunConfig resolve(RunConfig config, const Dataset& dataset);

/// For forecasts past the data: training defaults to the whole history and
/// the test range is dropped.
RunConfig resolve_forward(RunConfig config, const Dataset& dataset);

/// Key-sorted JSON of every setting that affects results.
std::string canonical_json(const RunConfig& config);
/// 16 hex digits of FNV-1a over canonical_json().
std::string config_hash(const RunConfig& config);

BacktestParams backtest_params(const RunConfig& config, int threads);

}  // namespace quartercast
