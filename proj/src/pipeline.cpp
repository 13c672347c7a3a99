#include "quartercast/pipeline.hpp"

#include <algorithm>
#include <atomic>

#include "quartercast/arima.hpp"
#include "quartercast/error.hpp"
#include "quartercast/ets.hpp"
#include "quartercast/metrics.hpp"
#include "quartercast/parallel.hpp"
#include "quartercast/stl.hpp"

namespace quartercast {

std::string to_string(ModelId model) {
  switch (model) {
    case ModelId::m1: return "m1";
    case ModelId::m2: return "m2";
    case ModelId::m3: return "m3";
  }
  return "?";
}

ModelId parse_model(std::string_view text) {
  if (text == "m1") return ModelId::m1;
  if (text == "m2") return ModelId::m2;
  if (text == "m3") return ModelId::m3;
  throw Error(ErrorKind::validation, "unknown model '" + std::string(text) + "' (expected m1, m2 or m3)");
}

std::string to_string(Candidate candidate) {
  switch (candidate) {
    case Candidate::arima: return "arima";
    case Candidate::ets: return "ets";
    case Candidate::stl: return "stl";
    case Candidate::average: return "average";
  }
  return "?";
}

namespace {

constexpr std::array kBaseCandidates{Candidate::arima, Candidate::ets, Candidate::stl};

std::optional<double> one_step(Candidate c, const QuarterlySeries& window) {
  try {
    switch (c) {
      case Candidate::arima: return forecast_arima(auto_select(window), 1)[0];
      case Candidate::ets: return forecast_ets(auto_select_ets(window), 1)[0];
      case Candidate::stl: return stlf_forecast(window, 1)[0];
      case Candidate::average: break;
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::nonconvergence) throw;
    return std::nullopt;
  }
  return std::nullopt;
}

void check_ranges(QuarterRange train, QuarterRange test) {
  if (train.last < train.first || test.last < test.first) {
    throw Error(ErrorKind::validation, "quarter ranges must have first <= last");
  }
  if (!(train.last < test.first)) {
    throw Error(ErrorKind::validation, "test range must start after the training range ends");
  }
}

ModelRun forest_run(const Dataset& dataset, QuarterRange train, const std::vector<PredictionKey>& targets,
                    FiscalQuarter last_target, const ForestParams& params, const FeatureConfig& config) {
  FeatureBuilder builder(dataset, config);
  const auto training = build_training_matrix(builder, train, params.threads);

  std::vector<std::string> geos;
  for (const auto& geo : dataset.geographies_with_total()) {
    if (std::any_of(training.begin(), training.end(), [&](const FeatureRow& r) { return r.geo == geo; })) {
      geos.push_back(geo);
    }
  }
  const FeatureSchema schema(geos, config);
  Eigen::VectorXd y(static_cast<Eigen::Index>(training.size()));
  for (std::size_t i = 0; i < training.size(); ++i) y[static_cast<Eigen::Index>(i)] = *training[i].target;

  ModelRun run;
  run.forest = train_forest(schema.encode(training), y, schema.names(), params);

  std::vector<std::pair<std::string, FiscalQuarter>> cells;
  for (const auto& k : targets) {
    std::pair cell{k.geo, quarter_add(k.target, -k.horizon)};
    if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(std::move(cell));
  }
  builder.prefetch(cells, params.threads);

  IndicatorView view;
  if (config.macro_enabled() && config.macro_source == MacroSource::indicator) {
    view = forecast_indicator_view(dataset, config, train.last, last_target);
  }
  run.test_rows.reserve(targets.size());
  for (const auto& k : targets) {
    run.test_rows.push_back(
        builder.build_row(k.geo, quarter_add(k.target, -k.horizon), k.horizon, RowMode::test, view));
  }
  const Eigen::VectorXd predicted =
      predict_forest_rows(run.forest, schema.encode(run.test_rows), params.threads);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    run.predictions.emplace(targets[i], predicted[static_cast<Eigen::Index>(i)]);
  }
  run.warnings = builder.warnings();
  return run;
}

}  // namespace

Model1Result model1_forecast(const QuarterlySeries& series, FiscalQuarter origin, const Model1Options& options) {
  const auto oldest = quarter_add(origin, -(kModel1Window + kModel1Evaluations - 1));
  if (!series.contains(origin) || !series.contains(oldest)) {
    throw Error(ErrorKind::insufficient_data, "Model 1 needs the " +
                                                  std::to_string(kModel1Window + kModel1Evaluations) +
                                                  " quarters of '" + series.id() + "' ending at " + to_string(origin));
  }

  Model1Result result;
  std::array<std::array<std::optional<double>, kModel1Evaluations + 1>, 3> fc;
  std::array<double, kModel1Evaluations> actual{};
  for (int i = 0; i <= kModel1Evaluations; ++i) {
    // i < 4: evaluation quarter t = origin-3+i fitted up to t-1; i == 4: the origin itself.
    const auto fit_end = quarter_add(origin, i - kModel1Evaluations);
    const auto window = series.window(fit_end, kModel1Window);
    if (i < kModel1Evaluations) actual[static_cast<std::size_t>(i)] = series.at(quarter_add(fit_end, 1));
    for (std::size_t c = 0; c < 3; ++c) {
      fc[c][static_cast<std::size_t>(i)] = one_step(kBaseCandidates[c], window);
      if (!fc[c][static_cast<std::size_t>(i)]) ++result.failed_fits;
    }
  }

  auto score = [&](Candidate id, auto&& forecast_at) {
    CandidateScore s;
    s.id = id;
    std::array<ForecastPair, kModel1Evaluations> pairs{};
    for (std::size_t i = 0; i <= kModel1Evaluations; ++i) {
      const std::optional<double> f = forecast_at(i);
      if (!f) return s;
      if (i < kModel1Evaluations) {
        s.trailing_forecasts[i] = *f;
        pairs[i] = {actual[i], *f};
      } else {
        s.forecast = *f;
      }
    }
    s.available = true;
    s.trailing_mape = mape(pairs);
    return s;
  };
  for (std::size_t c = 0; c < 3; ++c) {
    result.candidates[c] = score(kBaseCandidates[c], [&](std::size_t i) { return fc[c][i]; });
  }
  result.candidates[3] = score(Candidate::average, [&](std::size_t i) -> std::optional<double> {
    if (!fc[0][i] || !fc[1][i] || !fc[2][i]) return std::nullopt;
    return (*fc[0][i] + *fc[1][i] + *fc[2][i]) / 3.0;
  });

  const CandidateScore* best = nullptr;
  for (const auto& s : result.candidates) {
    if (!s.available || (s.id == Candidate::average && !options.include_average)) continue;
    if (best == nullptr || s.trailing_mape < best->trailing_mape) best = &s;
  }
  if (best == nullptr) {
    throw Error(ErrorKind::nonconvergence,
                "no Model 1 candidate could be fitted for '" + series.id() + "' at " + to_string(origin));
  }
  result.chosen = best->id;
  result.forecast = best->forecast;
  return result;
}

std::vector<PredictionKey> rolling_targets(const Dataset& dataset, QuarterRange test, int max_horizon) {
  const auto first_origin = quarter_add(test.first, -1);
  std::vector<PredictionKey> out;
  for (const auto& geo : dataset.geographies_with_total()) {
    for (int h = 1; h <= max_horizon; ++h) {
      for (auto t = test.first; t <= test.last; t = quarter_add(t, 1)) {
        if (quarter_add(t, -h) >= first_origin) out.push_back({geo, t, h});
      }
    }
  }
  return out;
}

ModelRun model2_run(const Dataset& dataset, QuarterRange train, QuarterRange test, const ForestParams& params,
                    const FeatureConfig& config) {
  check_ranges(train, test);
  FeatureConfig plain = config;
  plain.indicators.clear();
  return forest_run(dataset, train, rolling_targets(dataset, test, kMaxHorizon), test.last, params, plain);
}

ModelRun model3_run(const Dataset& dataset, QuarterRange train, QuarterRange test, const ForestParams& params,
                    const FeatureConfig& config) {
  check_ranges(train, test);
  if (!config.macro_enabled()) throw Error(ErrorKind::validation, "Model 3 needs at least one indicator");
  return forest_run(dataset, train, rolling_targets(dataset, test, kMaxHorizon), test.last, params, config);
}

ModelRun forecast_forward(const Dataset& dataset, ModelId model, QuarterRange train, FiscalQuarter origin,
                          const BacktestParams& params) {
  if (train.last < train.first || origin < train.last) {
    throw Error(ErrorKind::validation, "forecast origin must not precede the end of the training range");
  }
  ModelRun run;
  if (model == ModelId::m1) {
    const auto geos = dataset.geographies_with_total();
    std::vector<Model1Result> results(geos.size());
    parallel_for(geos.size(), params.threads,
                 [&](std::size_t i) { results[i] = model1_forecast(dataset.series(geos[i]), origin, params.model1); });
    for (std::size_t i = 0; i < geos.size(); ++i) {
      run.predictions.emplace(PredictionKey{geos[i], quarter_add(origin, 1), 1}, results[i].forecast);
      if (results[i].failed_fits > 0) run.warnings["model1_failed_fits"] += results[i].failed_fits;
    }
    return run;
  }
  FeatureConfig config = params.features;
  if (model == ModelId::m2) config.indicators.clear();
  if (model == ModelId::m3 && !config.macro_enabled()) {
    throw Error(ErrorKind::validation, "Model 3 needs at least one indicator");
  }
  std::vector<PredictionKey> targets;
  for (const auto& geo : dataset.geographies_with_total()) {
    for (int h = 1; h <= kMaxHorizon; ++h) targets.push_back({geo, quarter_add(origin, h), h});
  }
  ForestParams forest = params.forest;
  forest.threads = params.threads;
  return forest_run(dataset, train, targets, quarter_add(origin, kMaxHorizon), forest, config);
}

const ReportCell* EvaluationReport::find(const std::string& geo, int horizon) const {
  for (const auto& c : cells) {
    if (c.geo == geo && c.horizon == horizon) return &c;
  }
  return nullptr;
}

std::vector<std::string> EvaluationReport::geographies() const {
  std::vector<std::string> out;
  for (const auto& c : cells) {
    if (std::find(out.begin(), out.end(), c.geo) == out.end()) out.push_back(c.geo);
  }
  return out;
}

std::vector<int> EvaluationReport::horizons() const {
  std::vector<int> out;
  for (const auto& c : cells) out.push_back(c.horizon);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EvaluationReport evaluate_forecaster(const Dataset& dataset, QuarterRange test, int max_horizon,
                                     const PointForecaster& forecaster, ReportMetadata metadata, int threads) {
  const auto keys = rolling_targets(dataset, test, max_horizon);
  for (const auto& k : keys) {
    if (!dataset.series(k.geo).contains(k.target)) {
      throw Error(ErrorKind::validation, "no actual revenue for '" + k.geo + "' at " + to_string(k.target) +
                                             " inside the test range");
    }
  }
  std::vector<double> forecasts(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    forecasts[i] = forecaster(keys[i].geo, quarter_add(keys[i].target, -keys[i].horizon), keys[i].horizon);
  });

  EvaluationReport report;
  report.metadata = std::move(metadata);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& k = keys[i];
    if (report.cells.empty() || report.cells.back().geo != k.geo || report.cells.back().horizon != k.horizon) {
      report.cells.push_back({k.geo, k.horizon, 0.0, {}});
    }
    const double actual = dataset.series(k.geo).at(k.target);
    report.cells.back().detail.push_back(
        {quarter_add(k.target, -k.horizon), k.target, actual, forecasts[i], ape(actual, forecasts[i])});
  }
  for (auto& cell : report.cells) {
    std::vector<ForecastPair> pairs;
    for (const auto& d : cell.detail) pairs.push_back({d.actual, d.forecast});
    cell.mape = mape(pairs);
  }
  return report;
}

EvaluationReport backtest(const Dataset& dataset, ModelId model, QuarterRange train, QuarterRange test,
                          const BacktestParams& params, Warnings* warnings) {
  check_ranges(train, test);
  ReportMetadata metadata{model, "", params.forest.seed, train, test};

  if (model == ModelId::m1) {
    std::atomic<long> failed{0};
    auto report = evaluate_forecaster(
        dataset, test, 1,
        [&](const std::string& geo, FiscalQuarter origin, int) {
          const auto r = model1_forecast(dataset.series(geo), origin, params.model1);
          failed += r.failed_fits;
          return r.forecast;
        },
        std::move(metadata), params.threads);
    if (warnings != nullptr && failed > 0) (*warnings)["model1_failed_fits"] += failed;
    return report;
  }

  ForestParams forest = params.forest;
  forest.threads = params.threads;
  const auto run = model == ModelId::m2 ? model2_run(dataset, train, test, forest, params.features)
                                        : model3_run(dataset, train, test, forest, params.features);
  if (warnings != nullptr) {
    for (const auto& [name, count] : run.warnings) (*warnings)[name] += count;
  }
  return evaluate_forecaster(
      dataset, test, kMaxHorizon,
      [&](const std::string& geo, FiscalQuarter origin, int h) {
        return run.predictions.at({geo, quarter_add(origin, h), h});
      },
      std::move(metadata), 1);
}

std::string table_label(const std::string& geo) { return geo == kTotalId ? "Total" : geo; }

namespace {

std::optional<double> improvement_or_na(double baseline, double candidate) {
  if (baseline == 0.0) return std::nullopt;
  return relative_improvement(baseline, candidate);
}

std::string horizon_column(int h) { return "Horizon " + std::to_string(h); }

const ReportCell& require_cell(const EvaluationReport& report, const std::string& geo, int h) {
  const auto* cell = report.find(geo, h);
  if (cell == nullptr) {
    throw Error(ErrorKind::schema_mismatch,
                "report has no cell for '" + geo + "' at horizon " + std::to_string(h));
  }
  return *cell;
}

}  // namespace

ComparisonTable compare_reports(const EvaluationReport& baseline, const EvaluationReport& candidate) {
  const auto geos = baseline.geographies();
  auto other = candidate.geographies();
  if (geos != other) throw Error(ErrorKind::schema_mismatch, "reports cover different geographies");
  std::vector<int> shared;
  const auto hb = baseline.horizons(), hc = candidate.horizons();
  std::set_intersection(hb.begin(), hb.end(), hc.begin(), hc.end(), std::back_inserter(shared));
  if (shared.empty()) throw Error(ErrorKind::schema_mismatch, "reports share no horizon");

  ComparisonTable table;
  table.title = to_string(candidate.metadata.model) + " relative to " + to_string(baseline.metadata.model);
  for (int h : shared) table.columns.push_back(horizon_column(h));
  for (const auto& geo : geos) {
    table.rows.push_back(table_label(geo));
    auto& row = table.cells.emplace_back();
    for (int h : shared) {
      row.push_back(improvement_or_na(require_cell(baseline, geo, h).mape, require_cell(candidate, geo, h).mape));
    }
  }
  return table;
}

ComparisonTable compare_horizons(const EvaluationReport& report) {
  const auto horizons = report.horizons();
  if (horizons.empty() || horizons.front() != 1 || horizons.size() < 2) {
    throw Error(ErrorKind::schema_mismatch, "horizon comparison needs horizon 1 and at least one more");
  }
  ComparisonTable table;
  table.title = to_string(report.metadata.model) + " horizons relative to horizon 1";
  for (std::size_t i = 1; i < horizons.size(); ++i) table.columns.push_back(horizon_column(horizons[i]));
  for (const auto& geo : report.geographies()) {
    table.rows.push_back(table_label(geo));
    auto& row = table.cells.emplace_back();
    const double base = require_cell(report, geo, 1).mape;
    for (std::size_t i = 1; i < horizons.size(); ++i) {
      row.push_back(improvement_or_na(base, require_cell(report, geo, horizons[i]).mape));
    }
  }
  return table;
}

ComparisonTable compare_with_experts(const EvaluationReport& report, const ExpertForecasts& experts) {
  if (experts.empty()) throw Error(ErrorKind::empty_set, "no expert forecasts to compare against");
  ComparisonTable table;
  table.title = to_string(report.metadata.model) + " relative to expert forecasts";
  table.columns = {horizon_column(1)};
  for (const auto& geo : report.geographies()) {
    const auto* cell = report.find(geo, 1);
    if (cell == nullptr) continue;
    for (const auto& d : cell->detail) {
      auto it = experts.find({geo, d.target});
      if (it == experts.end()) continue;
      table.rows.push_back(table_label(geo) + " " + to_string(d.target));
      table.cells.push_back({improvement_or_na(ape(d.actual, it->second), d.ape)});
    }
  }
  if (table.rows.empty()) {
    throw Error(ErrorKind::empty_set, "no expert forecast matches a horizon-1 quarter of the report");
  }
  return table;
}

}  // namespace quartercast
