#include "quartercast/features.hpp"

#include <algorithm>

#include "quartercast/arima.hpp"
#include "quartercast/error.hpp"
#include "quartercast/ets.hpp"
#include "quartercast/metrics.hpp"
#include "quartercast/parallel.hpp"
#include "quartercast/stl.hpp"

namespace quartercast {

bool IndicatorFeatureConfig::enabled_for(const std::string& geo) const {
  return geos.empty() || std::find(geos.begin(), geos.end(), geo) != geos.end();
}

namespace {

BaseForecasts forecast_window(const QuarterlySeries& window) {
  BaseForecasts out;
  try {
    out.arima = forecast_arima(auto_select(window), kMaxHorizon);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::nonconvergence) throw;
    out.arima = Eigen::VectorXd::Constant(kMaxHorizon, window.values()[window.size() - 1]);
    out.arima_fallback = true;
  }
  out.ets = forecast_ets(auto_select_ets(window), kMaxHorizon);
  out.stl = stlf_forecast(window, kMaxHorizon);
  return out;
}

void check_horizon(int h) {
  if (h < 1 || h > kMaxHorizon) {
    throw Error(ErrorKind::validation, "horizon " + std::to_string(h) + " outside 1.." + std::to_string(kMaxHorizon));
  }
}

int oldest_lag_offset(LagConvention lags) { return lags == LagConvention::origin ? kLagCount - 1 : kLagCount; }

const QuarterlySeries& view_series(const IndicatorView& view, const std::string& geo, const std::string& indicator) {
  auto it = view.find({geo, indicator});
  if (it == view.end()) {
    throw Error(ErrorKind::missing_indicator, "no indicator '" + indicator + "' for geography '" + geo + "'");
  }
  return it->second;
}

template <class Fn>
void for_each_enabled(const Dataset& dataset, const FeatureConfig& config, Fn&& fn) {
  if (config.macro_source != MacroSource::indicator) return;
  for (const auto& ind : config.indicators) {
    for (const auto& geo : dataset.geographies_with_total()) {
      if (!ind.enabled_for(geo)) continue;
      if (!dataset.has_indicator(geo, ind.indicator)) {
        throw Error(ErrorKind::missing_indicator,
                    "no indicator '" + ind.indicator + "' for geography '" + geo + "'");
      }
      fn(geo, ind.indicator, dataset.indicator(geo, ind.indicator));
    }
  }
}

}  // namespace

BaseForecasts base_forecasts(const QuarterlySeries& series, FiscalQuarter origin) {
  return forecast_window(series.window(origin, kFeatureWindow));
}

std::array<double, 3> base_forecasts(const QuarterlySeries& series, FiscalQuarter origin, int h) {
  check_horizon(h);
  const auto fc = base_forecasts(series, origin);
  return {fc.arima[h - 1], fc.ets[h - 1], fc.stl[h - 1]};
}

Eigen::VectorXd forecast_indicator(const QuarterlySeries& indicator, int h_max) {
  if (indicator.size() < 10) {
    throw Error(ErrorKind::insufficient_data,
                "indicator '" + indicator.id() + "' needs at least 10 quarters to forecast");
  }
  return forecast_arima(auto_select(indicator), h_max);
}

IndicatorView actual_indicator_view(const Dataset& dataset, const FeatureConfig& config) {
  IndicatorView view;
  for_each_enabled(dataset, config, [&](const std::string& geo, const std::string& id, const QuarterlySeries& s) {
    view.emplace(IndicatorKey{geo, id}, s);
  });
  return view;
}

IndicatorView forecast_indicator_view(const Dataset& dataset, const FeatureConfig& config,
                                      FiscalQuarter known_through, FiscalQuarter needed_through) {
  IndicatorView view;
  for_each_enabled(dataset, config, [&](const std::string& geo, const std::string& id, const QuarterlySeries& s) {
    QuarterlySeries known = s.slice(s.first(), known_through);
    if (known.empty()) {
      throw Error(ErrorKind::missing_indicator, "indicator '" + id + "' for '" + geo + "' has no values through " +
                                                    to_string(known_through));
    }
    const auto steps = quarters_between(known.last(), needed_through);
    if (steps > 0) known = known.extended(forecast_indicator(known, static_cast<int>(steps)));
    view.emplace(IndicatorKey{geo, id}, std::move(known));
  });
  return view;
}

MacroValues macro_features(const Dataset& dataset, const std::string& geo, FiscalQuarter origin,
                           FiscalQuarter target_quarter, const FeatureConfig& config, std::size_t indicator,
                           const IndicatorView& view, double avg_ts_fc) {
  MacroValues out;
  if (config.macro_source == MacroSource::revenue) {
    const auto& revenue = dataset.series(geo);
    if (config.macro_at_origin) out.yoy_at_origin = yoy_growth(revenue, origin);
    if (config.macro_at_target) {
      const double prior = revenue.at(quarter_add(target_quarter, -4));
      if (prior == 0.0) throw Error(ErrorKind::zero_denominator, "zero prior-year revenue for '" + geo + "'");
      out.yoy_at_target = (avg_ts_fc - prior) / prior;
    }
    return out;
  }
  const auto& series = view_series(view, geo, config.indicators.at(indicator).indicator);
  if (config.macro_at_origin) out.yoy_at_origin = yoy_growth(series, origin);
  if (config.macro_at_target) out.yoy_at_target = yoy_growth(series, target_quarter);
  return out;
}

FeatureBuilder::FeatureBuilder(const Dataset& dataset, FeatureConfig config)
    : dataset_(dataset), config_(std::move(config)) {}

bool FeatureBuilder::has_history(const std::string& geo, FiscalQuarter origin) const {
  const auto& s = dataset_.series(geo);
  const auto oldest = std::min(quarter_add(origin, -(kFeatureWindow - 1)),
                               quarter_add(origin, -oldest_lag_offset(config_.lags)));
  return s.contains(origin) && s.contains(oldest);
}

BaseForecasts FeatureBuilder::forecasts(const std::string& geo, FiscalQuarter origin) {
  const auto window = dataset_.series(geo).window(origin, kFeatureWindow);
  std::vector<double> key(window.values().begin(), window.values().end());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  // Fits run unlocked; a concurrent duplicate computes the same value.
  BaseForecasts fc = forecast_window(window);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(std::move(key), std::move(fc));
  if (inserted && it->second.arima_fallback) ++warnings_["arima_naive_fallback"];
  return it->second;
}

void FeatureBuilder::prefetch(const std::vector<std::pair<std::string, FiscalQuarter>>& cells, int threads) {
  parallel_for(cells.size(), threads, [&](std::size_t i) { forecasts(cells[i].first, cells[i].second); });
}

void FeatureBuilder::add_warning(const std::string& name, long count) {
  std::lock_guard lock(mutex_);
  warnings_[name] += count;
}

Warnings FeatureBuilder::warnings() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

FeatureRow FeatureBuilder::build_row(const std::string& geo, FiscalQuarter origin, int h, RowMode mode,
                                     const IndicatorView& view) {
  check_horizon(h);
  const auto& series = dataset_.series(geo);
  if (!has_history(geo, origin)) {
    throw Error(ErrorKind::insufficient_data,
                "'" + geo + "' lacks the history for a feature row at origin " + to_string(origin));
  }
  FeatureRow row;
  row.geo = geo;
  row.origin = origin;
  row.horizon = h;
  row.target_quarter = quarter_add(origin, h);

  const auto fc = forecasts(geo, origin);
  row.arima_fc = fc.arima[h - 1];
  row.ets_fc = fc.ets[h - 1];
  row.stl_fc = fc.stl[h - 1];
  row.avg_ts_fc = (row.arima_fc + row.ets_fc + row.stl_fc) / 3.0;

  const int shift = config_.lags == LagConvention::origin ? 1 : 0;
  for (int k = 1; k <= kLagCount; ++k) row.lags[k - 1] = series.at(quarter_add(origin, shift - k));

  row.macro.resize(config_.indicators.size());
  for (std::size_t i = 0; i < config_.indicators.size(); ++i) {
    if (!config_.indicators[i].enabled_for(geo)) continue;
    row.macro[i] = macro_features(dataset_, geo, origin, row.target_quarter, config_, i, view, row.avg_ts_fc);
  }

  if (mode == RowMode::training && series.contains(row.target_quarter)) row.target = series.at(row.target_quarter);
  return row;
}

FeatureRow build_row(const Dataset& dataset, const std::string& geo, FiscalQuarter origin, int h,
                     const FeatureConfig& config, RowMode mode) {
  FeatureBuilder builder(dataset, config);
  return builder.build_row(geo, origin, h, mode, actual_indicator_view(dataset, config));
}

std::vector<std::pair<std::string, FiscalQuarter>> training_cells(const FeatureBuilder& builder,
                                                                  QuarterRange train) {
  std::vector<std::pair<std::string, FiscalQuarter>> cells;
  for (const auto& geo : builder.dataset().geographies_with_total()) {
    const auto& series = builder.dataset().series(geo);
    for (auto origin = quarter_add(train.first, -kMaxHorizon); origin < train.last;
         origin = quarter_add(origin, 1)) {
      bool used = false;
      for (int h = 1; h <= kMaxHorizon; ++h) {
        const auto target = quarter_add(origin, h);
        used = used || (train.contains(target) && series.contains(target));
      }
      if (used && builder.has_history(geo, origin)) cells.emplace_back(geo, origin);
    }
  }
  return cells;
}

std::vector<FeatureRow> build_training_matrix(FeatureBuilder& builder, QuarterRange train, int threads) {
  const auto& dataset = builder.dataset();
  for (const auto& geo : dataset.geographies_with_total()) {
    const auto& s = dataset.series(geo);
    if (train.first < s.first() || s.last() < train.last) {
      throw Error(ErrorKind::validation, "training range " + to_string(train.first) + ".." +
                                             to_string(train.last) + " exceeds the history of '" + geo + "'");
    }
  }
  const auto view = actual_indicator_view(dataset, builder.config());
  builder.prefetch(training_cells(builder, train), threads);

  std::vector<FeatureRow> rows;
  long skipped = 0;
  for (const auto& geo : dataset.geographies_with_total()) {
    for (int h = 1; h <= kMaxHorizon; ++h) {
      for (auto target = train.first; target <= train.last; target = quarter_add(target, 1)) {
        const auto origin = quarter_add(target, -h);
        if (!builder.has_history(geo, origin)) {
          ++skipped;
          continue;
        }
        rows.push_back(builder.build_row(geo, origin, h, RowMode::training, view));
      }
    }
  }
  if (skipped > 0) builder.add_warning("skipped_training_rows", skipped);
  if (rows.empty()) {
    throw Error(ErrorKind::empty_training_set, "no training rows have the " + std::to_string(kFeatureWindow) +
                                                   "-quarter history they need");
  }
  return rows;
}

std::vector<FeatureRow> build_training_matrix(const Dataset& dataset, QuarterRange train,
                                              const FeatureConfig& config) {
  FeatureBuilder builder(dataset, config);
  return build_training_matrix(builder, train);
}

FeatureSchema::FeatureSchema(std::vector<std::string> geos, const FeatureConfig& config)
    : geos_(std::move(geos)),
      n_indicators_(config.indicators.size()),
      macro_at_origin_(config.macro_at_origin),
      macro_at_target_(config.macro_at_target) {
  names_.emplace_back("horizon");
  for (const auto& g : geos_) names_.push_back("geo=" + g);
  for (const char* n : {"arima_fc", "ets_fc", "stl_fc", "avg_ts_fc"}) names_.emplace_back(n);
  for (int k = 1; k <= kLagCount; ++k) names_.push_back("lag" + std::to_string(k));
  const std::string prefix = config.macro_source == MacroSource::revenue ? "revenue_yoy:" : "yoy:";
  for (const auto& ind : config.indicators) {
    if (macro_at_origin_) names_.push_back(prefix + ind.indicator + "@origin");
    if (macro_at_target_) names_.push_back(prefix + ind.indicator + "@target");
  }
}

Eigen::VectorXd FeatureSchema::encode(const FeatureRow& row) const {
  auto geo = std::find(geos_.begin(), geos_.end(), row.geo);
  if (geo == geos_.end()) {
    throw Error(ErrorKind::unknown_geography, "geography '" + row.geo + "' was not seen in training");
  }
  if (row.macro.size() != n_indicators_) {
    throw Error(ErrorKind::schema_mismatch, "feature row carries " + std::to_string(row.macro.size()) +
                                                " indicator blocks, schema has " + std::to_string(n_indicators_));
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size());
  Eigen::Index c = 0;
  x[c++] = row.horizon;
  x[c + (geo - geos_.begin())] = 1.0;
  c += static_cast<Eigen::Index>(geos_.size());
  x[c++] = row.arima_fc;
  x[c++] = row.ets_fc;
  x[c++] = row.stl_fc;
  x[c++] = row.avg_ts_fc;
  for (double lag : row.lags) x[c++] = lag;
  for (const auto& m : row.macro) {
    if (macro_at_origin_) x[c++] = m && m->yoy_at_origin ? *m->yoy_at_origin : 0.0;
    if (macro_at_target_) x[c++] = m && m->yoy_at_target ? *m->yoy_at_target : 0.0;
  }
  return x;
}

Eigen::MatrixXd FeatureSchema::encode(const std::vector<FeatureRow>& rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), size());
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = encode(rows[i]).transpose();
  return x;
}

}  // namespace quartercast
