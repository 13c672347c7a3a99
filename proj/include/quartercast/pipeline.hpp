#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quartercast/calendar.hpp"
#include "quartercast/features.hpp"
#include "quartercast/forest.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

enum class ModelId { m1, m2, m3 };
std::string to_string(ModelId model);
ModelId parse_model(std::string_view text);

inline constexpr int kModel1Window = 14;
inline constexpr int kModel1Evaluations = 4;

enum class Candidate { arima, ets, stl, average };  // also the tie-break priority
std::string to_string(Candidate candidate);

struct CandidateScore {
  Candidate id = Candidate::arima;
  bool available = false;  // fitted at every evaluation point and at the origin
  double forecast = 0.0;
  double trailing_mape = 0.0;
  std::array<double, kModel1Evaluations> trailing_forecasts{};  // for origin-3 .. origin
};

struct Model1Options {
  bool include_average = true;
  friend bool operator==(const Model1Options&, const Model1Options&) = default;
};

struct Model1Result {
  double forecast = 0.0;
  Candidate chosen = Candidate::arima;
  std::array<CandidateScore, 4> candidates;  // indexed by Candidate
  int failed_fits = 0;
};

/// One-step forecast for origin+1 from whichever candidate had the lowest
/// MAPE over one-step refits at origin-3 .. origin, each on the 14 quarters
/// before it. Needs the 18 quarters ending at origin.
Model1Result model1_forecast(const QuarterlySeries& series, FiscalQuarter origin, const Model1Options& options = {});

struct PredictionKey {
  std::string geo;
  FiscalQuarter target;
  int horizon = 1;

  friend auto operator<=>(const PredictionKey&, const PredictionKey&) = default;
};

using Predictions = std::map<PredictionKey, double>;

struct ModelRun {
  Predictions predictions;
  std::vector<FeatureRow> test_rows;
  Forest forest;
  Warnings warnings;
};

/// Every (geo or TOTAL, h, target) with target in `test` whose origin
/// target-h is at least test.first-1, in dataset geography order.
std::vector<PredictionKey> rolling_targets(const Dataset& dataset, QuarterRange test, int max_horizon);

/// One global forest on the training matrix for `train`, queried at the
/// rolling test targets. Macro columns in `config` are dropped.
ModelRun model2_run(const Dataset& dataset, QuarterRange train, QuarterRange test, const ForestParams& params,
                    const FeatureConfig& config = {});
/// As model2_run with the macro columns of `config`; test rows read indicator
/// values known at train.last extended by ARIMA forecasts.
ModelRun model3_run(const Dataset& dataset, QuarterRange train, QuarterRange test, const ForestParams& params,
                    const FeatureConfig& config);

struct ApeDetail {
  FiscalQuarter origin;
  FiscalQuarter target;
  double actual = 0.0;
  double forecast = 0.0;
  double ape = 0.0;

  friend bool operator==(const ApeDetail&, const ApeDetail&) = default;
};

struct ReportCell {
  std::string geo;
  int horizon = 1;
  double mape = 0.0;
  std::vector<ApeDetail> detail;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct ReportMetadata {
  ModelId model = ModelId::m1;
  std::string config_hash;
  std::uint64_t seed = 0;
  QuarterRange train;
  QuarterRange test;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct EvaluationReport {
  ReportMetadata metadata;
  std::vector<ReportCell> cells;  // geography order, then horizon

  const ReportCell* find(const std::string& geo, int horizon) const;
  std::vector<std::string> geographies() const;
  std::vector<int> horizons() const;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

using PointForecaster = std::function<double(const std::string& geo, FiscalQuarter origin, int horizon)>;

/// MAPE per (geography, horizon) of `forecaster` over rolling_targets().
/// Calls may run concurrently; results do not depend on their order.
EvaluationReport evaluate_forecaster(const Dataset& dataset, QuarterRange test, int max_horizon,
                                     const PointForecaster& forecaster, ReportMetadata metadata, int threads = 0);

struct BacktestParams {
  ForestParams forest;
  FeatureConfig features;
  Model1Options model1;
  int threads = 0;
};

/// Model 1 reports horizon 1 only; models 2 and 3 report horizons 1..4.
/// The config hash is left for the caller to fill.
EvaluationReport backtest(const Dataset& dataset, ModelId model, QuarterRange train, QuarterRange test,
                          const BacktestParams& params, Warnings* warnings = nullptr);

/// Forecasts from a single origin: horizon 1 for Model 1, horizons 1..4 for
/// the forest models trained on `train`.
ModelRun forecast_forward(const Dataset& dataset, ModelId model, QuarterRange train, FiscalQuarter origin,
                          const BacktestParams& params);

struct ComparisonTable {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<double>>> cells;  // nullopt: baseline error was zero

  friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

/// Row label used for a geography in tables ("Total" for TOTAL).
std::string table_label(const std::string& geo);

/// relative_improvement(baseline MAPE, candidate MAPE) per geography and
/// shared horizon.
ComparisonTable compare_reports(const EvaluationReport& baseline, const EvaluationReport& candidate);

/// Horizons 2.. of one report against its own horizon 1.
ComparisonTable compare_horizons(const EvaluationReport& report);

using ExpertForecasts = std::map<std::pair<std::string, FiscalQuarter>, double>;

/// Per expert-forecast quarter: relative_improvement(expert APE, horizon-1 APE).
ComparisonTable compare_with_experts(const EvaluationReport& report, const ExpertForecasts& experts);

}  // namespace quartercast
