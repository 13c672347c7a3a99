#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quartercast/calendar.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

inline constexpr int kFeatureWindow = 16;
inline constexpr int kLagCount = 8;
inline constexpr int kMaxHorizon = 4;

/// Counted, non-fatal conditions keyed by a short name.
using Warnings = std::map<std::string, long>;

enum class LagConvention {
  origin,    // lag k = revenue at origin + 1 - k
  previous,  // lag k = revenue at origin - k
};

enum class MacroSource {
  indicator,  // YoY growth of the indicator series
  revenue,    // YoY growth of revenue; no indicator data is read
};

struct IndicatorFeatureConfig {
  std::string indicator;
  std::vector<std::string> geos;  // empty: every geography and TOTAL

  bool enabled_for(const std::string& geo) const;
  friend bool operator==(const IndicatorFeatureConfig&, const IndicatorFeatureConfig&) = default;
};

struct FeatureConfig {
  LagConvention lags = LagConvention::origin;
  std::vector<IndicatorFeatureConfig> indicators;  // empty: no macro columns
  MacroSource macro_source = MacroSource::indicator;
  bool macro_at_origin = true;
  bool macro_at_target = true;

  bool macro_enabled() const noexcept { return !indicators.empty(); }
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct MacroValues {
  std::optional<double> yoy_at_origin;
  std::optional<double> yoy_at_target;

  friend bool operator==(const MacroValues&, const MacroValues&) = default;
};

struct FeatureRow {
  std::string geo;
  FiscalQuarter origin;
  int horizon = 1;
  FiscalQuarter target_quarter;
  double arima_fc = 0.0;
  double ets_fc = 0.0;
  double stl_fc = 0.0;
  double avg_ts_fc = 0.0;
  std::array<double, kLagCount> lags{};
  std::vector<std::optional<MacroValues>> macro;  // per configured indicator; nullopt if not enabled for geo
  std::optional<double> target;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// Forecasts for horizons 1..kMaxHorizon from each base model.
struct BaseForecasts {
  Eigen::VectorXd arima;
  Eigen::VectorXd ets;
  Eigen::VectorXd stl;
  bool arima_fallback = false;  // ARIMA did not converge; naive forecast used
};

/// ARIMA, ETS and STL fitted on exactly the kFeatureWindow quarters ending at
/// origin. A non-converging ARIMA search falls back to the last value.
BaseForecasts base_forecasts(const QuarterlySeries& series, FiscalQuarter origin);
/// (arima, ets, stl) at horizon h.
std::array<double, 3> base_forecasts(const QuarterlySeries& series, FiscalQuarter origin, int h);

/// auto_select ARIMA on the whole history, forecast h_max steps.
Eigen::VectorXd forecast_indicator(const QuarterlySeries& indicator, int h_max);

/// Indicator series rows may read, keyed like Dataset::indicators.
using IndicatorView = std::map<IndicatorKey, QuarterlySeries>;

/// The enabled indicators cut after `known_through` and extended with ARIMA
/// forecasts through `needed_through`. Series already reaching
/// `needed_through` are still cut and re-forecast.
IndicatorView forecast_indicator_view(const Dataset& dataset, const FeatureConfig& config,
                                      FiscalQuarter known_through, FiscalQuarter needed_through);

/// The enabled indicators exactly as recorded.
IndicatorView actual_indicator_view(const Dataset& dataset, const FeatureConfig& config);

/// Macro values for one configured indicator (index into config.indicators).
MacroValues macro_features(const Dataset& dataset, const std::string& geo, FiscalQuarter origin,
                           FiscalQuarter target_quarter, const FeatureConfig& config, std::size_t indicator,
                           const IndicatorView& view, double avg_ts_fc);

enum class RowMode { training, test };

/// Builds feature rows, caching base forecasts by exact window values.
/// Safe to share between threads.
class FeatureBuilder {
 public:
  FeatureBuilder(const Dataset& dataset, FeatureConfig config);

  const Dataset& dataset() const noexcept { return dataset_; }
  const FeatureConfig& config() const noexcept { return config_; }

  FeatureRow build_row(const std::string& geo, FiscalQuarter origin, int h, RowMode mode,
                       const IndicatorView& view);

  /// Base forecasts for (geo, origin), computed once per distinct window.
  BaseForecasts forecasts(const std::string& geo, FiscalQuarter origin);

  /// Fills the cache for every (geo, origin) pair concurrently.
  void prefetch(const std::vector<std::pair<std::string, FiscalQuarter>>& cells, int threads);

  /// Whether `origin` has the window and lag history a row needs.
  bool has_history(const std::string& geo, FiscalQuarter origin) const;

  Warnings warnings() const;
  void add_warning(const std::string& name, long count = 1);

 private:
  const Dataset& dataset_;
  FeatureConfig config_;
  mutable std::mutex mutex_;
  std::map<std::vector<double>, BaseForecasts> cache_;
  Warnings warnings_;
};

FeatureRow build_row(const Dataset& dataset, const std::string& geo, FiscalQuarter origin, int h,
                     const FeatureConfig& config, RowMode mode = RowMode::training);

/// (geo, origin) pairs whose rows make up the training matrix for `train`.
std::vector<std::pair<std::string, FiscalQuarter>> training_cells(const FeatureBuilder& builder,
                                                                  QuarterRange train);

/// Every (geo or TOTAL, h, origin) with target in `train` and enough history;
/// the rest are skipped and counted under "skipped_training_rows".
std::vector<FeatureRow> build_training_matrix(FeatureBuilder& builder, QuarterRange train, int threads = 0);
std::vector<FeatureRow> build_training_matrix(const Dataset& dataset, QuarterRange train,
                                              const FeatureConfig& config);

/// Column layout: horizon, one-hot geographies, base forecasts and average,
/// lags, then macro columns.
class FeatureSchema {
 public:
  FeatureSchema(std::vector<std::string> geos, const FeatureConfig& config);

  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(names_.size()); }
  const std::vector<std::string>& geos() const noexcept { return geos_; }

  /// Throws unknown_geography for a geography the schema lacks.
  Eigen::VectorXd encode(const FeatureRow& row) const;
  Eigen::MatrixXd encode(const std::vector<FeatureRow>& rows) const;

 private:
  std::vector<std::string> geos_;
  std::vector<std::string> names_;
  std::size_t n_indicators_ = 0;
  bool macro_at_origin_ = true;
  bool macro_at_target_ = true;
};

}  // namespace quartercast
