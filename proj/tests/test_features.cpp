#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "quartercast/error.hpp"
#include "quartercast/features.hpp"
#include "quartercast/metrics.hpp"
#include "test_util.hpp"

namespace quartercast {
namespace {

using testing::error_kind;
using testing::make_series;

const FiscalQuarter kStart{2009, 1};

Eigen::VectorXd noisy_seasonal(Eigen::Index n, double level, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 4.0);
  Eigen::VectorXd y = testing::trend_seasonal(n, level, 3.0, {25.0, -10.0, -30.0, 15.0});
  for (auto& v : y) v += noise(rng);
  return y;
}

Dataset two_geo_dataset(Eigen::Index n) {
  std::map<std::string, QuarterlySeries> revenue;
  revenue.emplace("Geo_1", make_series(noisy_seasonal(n, 500.0, 1), kStart, "Geo_1"));
  revenue.emplace("Geo_2", make_series(noisy_seasonal(n, 800.0, 2), kStart, "Geo_2"));
  return make_dataset(std::move(revenue));
}

/// Indicator with quarterly growth factor g for every enabled geography.
std::map<IndicatorKey, QuarterlySeries> growth_indicators(const std::vector<std::string>& geos, Eigen::Index n,
                                                          double g, double scale = 100.0) {
  std::map<IndicatorKey, QuarterlySeries> out;
  for (const auto& geo : geos) {
    Eigen::VectorXd v(n);
    for (Eigen::Index t = 0; t < n; ++t) v[t] = scale * std::pow(g, static_cast<double>(t));
    out.emplace(IndicatorKey{geo, "gdp"}, make_series(v, quarter_add(kStart, -4), geo));
  }
  return out;
}

Dataset with_revenue(const Dataset& d, const std::string& geo, FiscalQuarter fq, double value) {
  auto revenue = d.revenue;
  revenue.at(geo) = revenue.at(geo).with_value(fq, value);
  return make_dataset(std::move(revenue), std::nullopt, d.indicators);
}

TEST(BaseForecasts, ConstantSeries) {
  const auto s = make_series(testing::constant(20, 250.0));
  for (int h = 1; h <= kMaxHorizon; ++h) {
    for (double fc : base_forecasts(s, s.last(), h)) EXPECT_NEAR(fc, 250.0, 250.0 * 1e-6) << "h=" << h;
  }
}

TEST(BaseForecasts, DependOnlyOnTheWindow) {
  const auto s = make_series(noisy_seasonal(30, 400.0, 3));
  const auto origin = s.last();
  const auto before = base_forecasts(s, origin);
  auto perturbed = s;
  for (FiscalQuarter q = s.first(); q < quarter_add(origin, -15); q = quarter_add(q, 1)) {
    perturbed = perturbed.with_value(q, perturbed.at(q) * 3.0 + 1.0);
  }
  const auto after = base_forecasts(perturbed, origin);
  EXPECT_EQ(before.arima, after.arima);
  EXPECT_EQ(before.ets, after.ets);
  EXPECT_EQ(before.stl, after.stl);
}

TEST(BaseForecasts, AverageNearTruthOnSeasonalSeries) {
  const std::array<double, 4> pattern{30.0, -10.0, -35.0, 15.0};
  const auto y = testing::trend_seasonal(21, 600.0, 4.0, pattern);
  const auto s = make_series(y.head(20));
  const auto fc = base_forecasts(s, s.last(), 1);
  const double avg = (fc[0] + fc[1] + fc[2]) / 3.0;
  EXPECT_NEAR(avg, y[20], 0.10 * y[20]);
}

TEST(BaseForecasts, ShortWindowIsInsufficient) {
  const auto s = make_series(testing::constant(15, 1.0));
  EXPECT_EQ(error_kind([&] { base_forecasts(s, s.last(), 1); }), ErrorKind::insufficient_data);
}

Dataset ramp_dataset(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(i + 1);
  std::map<std::string, QuarterlySeries> revenue;
  revenue.emplace("Geo_1", make_series(v, kStart, "Geo_1"));
  return make_dataset(std::move(revenue));
}

TEST(BuildRow, LagsCountBackFromOrigin) {
  const auto d = ramp_dataset(20);
  const auto origin = quarter_add(kStart, 19);
  const auto row = build_row(d, "Geo_1", origin, 1, {});
  EXPECT_EQ(row.lags, (std::array<double, 8>{20, 19, 18, 17, 16, 15, 14, 13}));
  EXPECT_EQ(row.target_quarter, quarter_add(origin, 1));
  EXPECT_FALSE(row.target.has_value());

  FeatureConfig previous;
  previous.lags = LagConvention::previous;
  EXPECT_EQ(build_row(d, "Geo_1", origin, 1, previous).lags,
            (std::array<double, 8>{19, 18, 17, 16, 15, 14, 13, 12}));
}

TEST(BuildRow, AverageIsExactMean) {
  const auto d = two_geo_dataset(24);
  for (int h = 1; h <= 4; ++h) {
    const auto row = build_row(d, "Geo_2", quarter_add(kStart, 19), h, {});
    EXPECT_EQ(row.avg_ts_fc - (row.arima_fc + row.ets_fc + row.stl_fc) / 3.0, 0.0);
  }
}

TEST(BuildRow, TrainingTargetIndexing) {
  const auto d = ramp_dataset(22);
  const auto origin = quarter_add(kStart, 19);
  const auto row = build_row(d, "Geo_1", origin, 2, {}, RowMode::training);
  ASSERT_TRUE(row.target.has_value());
  EXPECT_EQ(*row.target, 22.0);
  EXPECT_FALSE(build_row(d, "Geo_1", origin, 2, {}, RowMode::test).target.has_value());
}

TEST(BuildRow, Errors) {
  const auto d = ramp_dataset(20);
  EXPECT_EQ(error_kind([&] { build_row(d, "Geo_1", quarter_add(kStart, 14), 1, {}); }),
            ErrorKind::insufficient_data);
  EXPECT_EQ(error_kind([&] { build_row(d, "Geo_1", quarter_add(kStart, 19), 5, {}); }), ErrorKind::validation);
  EXPECT_EQ(error_kind([&] { build_row(d, "Geo_9", quarter_add(kStart, 19), 1, {}); }),
            ErrorKind::unknown_geography);
  FeatureConfig macro;
  macro.indicators = {{"gdp", {}}};
  EXPECT_EQ(error_kind([&] { build_row(d, "Geo_1", quarter_add(kStart, 19), 1, macro); }),
            ErrorKind::missing_indicator);
}

TEST(TrainingMatrix, SeventeenQuartersGiveOneRowPerSeries) {
  const auto d = two_geo_dataset(17);
  FeatureBuilder builder(d, {});
  const auto rows = build_training_matrix(builder, {kStart, quarter_add(kStart, 16)});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.horizon, 1);
    EXPECT_EQ(r.origin, quarter_add(kStart, 15));
    ASSERT_TRUE(r.target.has_value());
  }
  EXPECT_EQ(builder.warnings().at("skipped_training_rows"), 3 * (4 * 17 - 1));
}

TEST(TrainingMatrix, EmptyIsAnError) {
  const auto d = two_geo_dataset(16);
  EXPECT_EQ(error_kind([&] { build_training_matrix(d, {kStart, quarter_add(kStart, 15)}, {}); }),
            ErrorKind::empty_training_set);
}

TEST(TrainingMatrix, IgnoresDataAfterLastTarget) {
  const auto d = two_geo_dataset(24);
  const QuarterRange train{quarter_add(kStart, 16), quarter_add(kStart, 21)};
  const auto base = build_training_matrix(d, train, {});
  auto changed = with_revenue(d, "Geo_1", quarter_add(kStart, 22), 9999.0);
  changed = with_revenue(changed, "Geo_2", quarter_add(kStart, 23), 1.0);
  EXPECT_EQ(build_training_matrix(changed, train, {}), base);
}

TEST(TrainingMatrix, IdenticalGeographiesDifferOnlyInName) {
  std::map<std::string, QuarterlySeries> revenue;
  const auto y = noisy_seasonal(20, 300.0, 7);
  revenue.emplace("A", make_series(y, kStart, "A"));
  revenue.emplace("B", make_series(y, kStart, "B"));
  const auto d = make_dataset(std::move(revenue));
  const auto rows = build_training_matrix(d, {quarter_add(kStart, 16), quarter_add(kStart, 19)}, {});
  std::vector<FeatureRow> a, b;
  for (const auto& r : rows) (r.geo == "A" ? a : r.geo == "B" ? b : a).push_back(r);
  ASSERT_EQ(a.size() - b.size(), b.size());  // a also collected TOTAL
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto renamed = b[i];
    renamed.geo = "A";
    EXPECT_EQ(renamed, a[i]);
  }
}

TEST(ForecastIndicator, Constant) {
  const auto fc = forecast_indicator(make_series(testing::constant(12, 1.0)), 5);
  ASSERT_EQ(fc.size(), 5);
  for (double v : fc) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(ForecastIndicator, LinearTrend) {
  Eigen::VectorXd v(41);
  for (Eigen::Index t = 0; t < 41; ++t) v[t] = 50.0 + 2.5 * static_cast<double>(t);
  const auto s = make_series(v.head(40));
  const auto fc = forecast_indicator(s, 3);
  EXPECT_NEAR(fc[0], v[40], 0.05 * v[40]);
  const auto extended = s.extended(fc);
  EXPECT_EQ(extended.first(), s.first());
  EXPECT_EQ(extended.last(), quarter_add(s.last(), 3));
}

TEST(ForecastIndicator, ShortHistory) {
  EXPECT_EQ(error_kind([] { forecast_indicator(make_series(testing::constant(9, 1.0)), 1); }),
            ErrorKind::insufficient_data);
}

FeatureConfig gdp_config() {
  FeatureConfig c;
  c.indicators = {{"gdp", {}}};
  return c;
}

TEST(MacroFeatures, FlatIndicatorGivesZero) {
  auto d = two_geo_dataset(24);
  d.indicators = growth_indicators(d.geographies_with_total(), 28, 1.0);
  const auto row = build_row(d, "Geo_1", quarter_add(kStart, 19), 3, gdp_config());
  ASSERT_TRUE(row.macro.at(0).has_value());
  EXPECT_EQ(row.macro[0]->yoy_at_origin, 0.0);
  EXPECT_EQ(row.macro[0]->yoy_at_target, 0.0);
}

TEST(MacroFeatures, ConstantAnnualGrowth) {
  auto d = two_geo_dataset(24);
  d.indicators = growth_indicators(d.geographies_with_total(), 28, std::pow(1.08, 0.25));
  const auto row = build_row(d, "TOTAL", quarter_add(kStart, 18), 2, gdp_config());
  EXPECT_NEAR(*row.macro.at(0)->yoy_at_origin, 0.08, 1e-12);
  EXPECT_NEAR(*row.macro.at(0)->yoy_at_target, 0.08, 1e-12);
}

TEST(MacroFeatures, ScaleInvariant) {
  auto d = two_geo_dataset(24);
  d.indicators = growth_indicators(d.geographies_with_total(), 28, 1.03);
  auto scaled = d;
  scaled.indicators = growth_indicators(d.geographies_with_total(), 28, 1.03, 100.0 * 2417.5);
  const auto origin = quarter_add(kStart, 19);
  const auto a = build_row(d, "Geo_2", origin, 4, gdp_config());
  const auto b = build_row(scaled, "Geo_2", origin, 4, gdp_config());
  EXPECT_NEAR(*a.macro[0]->yoy_at_origin, *b.macro[0]->yoy_at_origin, 1e-14);
  EXPECT_NEAR(*a.macro[0]->yoy_at_target, *b.macro[0]->yoy_at_target, 1e-14);
}

TEST(MacroFeatures, DisabledGeographyHasNoBlock) {
  auto d = two_geo_dataset(24);
  d.indicators = growth_indicators({"Geo_1"}, 28, 1.02);
  FeatureConfig c;
  c.indicators = {{"gdp", {"Geo_1"}}};
  const auto origin = quarter_add(kStart, 19);
  EXPECT_TRUE(build_row(d, "Geo_1", origin, 1, c).macro.at(0).has_value());
  EXPECT_FALSE(build_row(d, "Geo_2", origin, 1, c).macro.at(0).has_value());
}

TEST(MacroFeatures, ForecastReplacementChangesOnlyTargetField) {
  auto d = two_geo_dataset(24);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> shock(0.0, 0.01);
  for (const auto& geo : d.geographies_with_total()) {
    Eigen::VectorXd v(28);
    double level = 100.0;
    for (auto& x : v) x = level *= 1.01 + shock(rng);
    d.indicators.emplace(IndicatorKey{geo, "gdp"}, make_series(v, quarter_add(kStart, -4), geo));
  }
  const auto config = gdp_config();
  const auto known = quarter_add(kStart, 19);
  const auto forecast_view = forecast_indicator_view(d, config, known, quarter_add(known, 4));
  EXPECT_EQ(forecast_view.at({"Geo_1", "gdp"}).last(), quarter_add(known, 4));

  FeatureBuilder builder(d, config);
  const auto origin = known;
  const auto with_forecasts = builder.build_row("Geo_1", origin, 2, RowMode::test, forecast_view);
  const auto with_actuals =
      builder.build_row("Geo_1", origin, 2, RowMode::test, actual_indicator_view(d, config));
  EXPECT_EQ(with_forecasts.macro[0]->yoy_at_origin, with_actuals.macro[0]->yoy_at_origin);
  EXPECT_NE(with_forecasts.macro[0]->yoy_at_target, with_actuals.macro[0]->yoy_at_target);
  auto a = with_forecasts, b = with_actuals;
  a.macro.clear();
  b.macro.clear();
  EXPECT_EQ(a, b);
}

TEST(MacroFeatures, RevenueSource) {
  auto d = two_geo_dataset(24);
  FeatureConfig c = gdp_config();
  c.macro_source = MacroSource::revenue;
  const auto origin = quarter_add(kStart, 19);
  const auto row = build_row(d, "Geo_1", origin, 2, c);
  const auto& s = d.series("Geo_1");
  EXPECT_EQ(*row.macro[0]->yoy_at_origin, yoy_growth(s, origin));
  const double prior = s.at(quarter_add(origin, -2));
  EXPECT_EQ(*row.macro[0]->yoy_at_target, (row.avg_ts_fc - prior) / prior);
}

TEST(Leakage, RevenueAfterOriginChangesNoFeature) {
  auto d = two_geo_dataset(26);
  d.indicators = growth_indicators(d.geographies_with_total(), 30, 1.01);
  const auto config = gdp_config();
  const auto origin = quarter_add(kStart, 20);
  auto changed = d;
  for (auto q = quarter_add(origin, 1); q <= d.total.last(); q = quarter_add(q, 1)) {
    changed = with_revenue(changed, "Geo_1", q, 1e6);
    changed = with_revenue(changed, "Geo_2", q, 0.5);
  }
  const auto view = forecast_indicator_view(d, config, origin, quarter_add(origin, 4));
  FeatureBuilder a(d, config), b(changed, config);
  for (const auto& geo : d.geographies_with_total()) {
    for (int h = 1; h <= 4; ++h) {
      EXPECT_EQ(a.build_row(geo, origin, h, RowMode::test, view), b.build_row(geo, origin, h, RowMode::test, view));
    }
  }
}

TEST(FeatureSchema, Layout) {
  FeatureConfig c = gdp_config();
  const FeatureSchema schema({"Geo_1", "Geo_2", "TOTAL"}, c);
  const std::vector<std::string> expected{
      "horizon", "geo=Geo_1", "geo=Geo_2", "geo=TOTAL", "arima_fc", "ets_fc", "stl_fc", "avg_ts_fc", "lag1",
      "lag2",    "lag3",      "lag4",      "lag5",      "lag6",     "lag7",   "lag8",   "yoy:gdp@origin",
      "yoy:gdp@target"};
  EXPECT_EQ(schema.names(), expected);

  FeatureRow row;
  row.geo = "Geo_2";
  row.horizon = 3;
  row.arima_fc = 1;
  row.ets_fc = 2;
  row.stl_fc = 3;
  row.avg_ts_fc = 2;
  row.lags = {8, 7, 6, 5, 4, 3, 2, 1};
  row.macro = {MacroValues{0.1, 0.2}};
  Eigen::VectorXd x(18);
  x << 3, 0, 1, 0, 1, 2, 3, 2, 8, 7, 6, 5, 4, 3, 2, 1, 0.1, 0.2;
  EXPECT_EQ(schema.encode(row), x);

  row.macro = {std::nullopt};
  x.tail(2).setZero();
  EXPECT_EQ(schema.encode(row), x);

  row.geo = "Geo_3";
  EXPECT_EQ(error_kind([&] { schema.encode(row); }), ErrorKind::unknown_geography);
}

}  // namespace
}  // namespace quartercast
