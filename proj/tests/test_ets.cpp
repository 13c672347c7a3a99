#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "quartercast/error.hpp"
#include "quartercast/ets.hpp"
#include "test_util.hpp"

namespace quartercast {
namespace {

using testing::make_series;

const EtsSpec kSimple{Trend::none, Season::none};

Eigen::VectorXd local_level_series(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> level_noise(0.0, 1.0), obs_noise(0.0, 1.5);
  double level = 50.0;
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    level += level_noise(rng);
    y[t] = level + obs_noise(rng);
  }
  return y;
}

// Simple exponential smoothing SSE for a given alpha with the initial level
// chosen in closed form: forecasts are a_t * l0 + c_t, so the SSE is a
// quadratic in l0.
double ses_profiled_sse(const Eigen::VectorXd& y, double alpha) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd a(n), c(n);
  double decay = 1.0, carry = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    a[t] = decay;
    c[t] = carry;
    carry = (1.0 - alpha) * carry + alpha * y[t];
    decay *= 1.0 - alpha;
  }
  const double l0 = a.dot(y - c) / a.squaredNorm();
  return (y - c - a * l0).squaredNorm();
}

TEST(FitEts, AlphaOneIsNaive) {
  const Eigen::VectorXd y = local_level_series(20, 3);
  EtsOptions options;
  options.fixed_alpha = 1.0;
  const auto fit = fit_ets(make_series(y), kSimple, options);
  EXPECT_EQ(fit.alpha, 1.0);
  const double naive_sse = (y.tail(19) - y.head(19)).squaredNorm();
  EXPECT_NEAR(fit.sse, naive_sse, 1e-9 * naive_sse);
  const auto errors = ets_filter(y, kSimple, {1.0}, EtsState{fit.initial_level}).errors;
  for (Eigen::Index t = 1; t < y.size(); ++t) EXPECT_EQ(y[t] - errors[t], y[t - 1]);
  EXPECT_EQ(forecast_ets(fit, 3), testing::constant(3, y[19]));
}

TEST(FitEts, AlphaZeroNeverUpdates) {
  const Eigen::VectorXd y = local_level_series(20, 4);
  EtsOptions options;
  options.fixed_alpha = 0.0;
  const auto fit = fit_ets(make_series(y), kSimple, options);
  const auto errors = ets_filter(y, kSimple, {0.0}, EtsState{fit.initial_level}).errors;
  for (Eigen::Index t = 0; t < y.size(); ++t) EXPECT_NEAR(y[t] - errors[t], fit.initial_level, 1e-12);
  EXPECT_NEAR(fit.initial_level, y.mean(), 1e-9);
}

TEST(FitEts, FreeAlphaMatchesGridOracle) {
  const Eigen::VectorXd y = local_level_series(30, 2016);
  double best_alpha = 0.0, best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double alpha = i / 100.0;
    const double sse = ses_profiled_sse(y, alpha);
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
    }
  }
  const auto fit = fit_ets(make_series(y), kSimple);
  EXPECT_NEAR(fit.alpha, best_alpha, 0.02);
  EXPECT_LE(fit.sse, best_sse * (1.0 + 1e-9));
}

TEST(FitEts, InsufficientData) {
  EXPECT_THROW(fit_ets(make_series(testing::constant(7, 1.0)), kSimple), Error);
}

TEST(AutoSelectEts, ConstantSeries) {
  const auto fit = auto_select_ets(make_series(testing::constant(16, 77.0)));
  const auto fc = forecast_ets(fit, 4);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(fc[k], 77.0, 1e-6 * 77.0);
  EXPECT_NEAR(fit_ets(make_series(testing::constant(16, 77.0)), kSimple).sse, 0.0, 1e-18);
}

TEST(AutoSelectEts, LinearRampPicksTrend) {
  Eigen::VectorXd y(21);
  for (Eigen::Index t = 0; t < 21; ++t) y[t] = 2.0 * static_cast<double>(t + 1);
  const auto train = make_series(y.head(20));
  const auto fit = auto_select_ets(train);
  EXPECT_NE(fit.spec.trend, Trend::none);
  const double selected_err = std::abs(forecast_ets(fit, 1)[0] - y[20]);
  const double flat_err = std::abs(forecast_ets(fit_ets(train, kSimple), 1)[0] - y[20]);
  EXPECT_LT(selected_err, flat_err);
}

TEST(AutoSelectEts, SquareWavePicksSeasonal) {
  const std::array<double, 4> wave{5.0, 5.0, -5.0, -5.0};
  const Eigen::VectorXd y = testing::trend_seasonal(28, 100.0, 0.0, wave);
  const auto fit = auto_select_ets(make_series(y.head(24)));
  EXPECT_EQ(fit.spec.seasonal, Season::additive);
  const auto fc = forecast_ets(fit, 4);
  const double amplitude = 5.0;
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(fc[k], y[24 + k], 0.05 * amplitude);
}

TEST(ForecastEts, HandRecursions) {
  EtsFit flat;
  flat.spec = kSimple;
  flat.final_state.level = 12.0;
  EXPECT_EQ(forecast_ets(flat, 4), testing::constant(4, 12.0));

  EtsFit linear;
  linear.spec = {Trend::additive, Season::none};
  linear.final_state = {10.0, 2.0, {}};
  Eigen::VectorXd expected(3);
  expected << 12.0, 14.0, 16.0;
  EXPECT_EQ(forecast_ets(linear, 3), expected);

  EtsFit damped;
  damped.spec = {Trend::damped, Season::none};
  damped.phi_damp = 0.9;
  damped.final_state = {10.0, 2.0, {}};
  const auto fc = forecast_ets(damped, 2);
  EXPECT_NEAR(fc[0], 10.0 + 0.9 * 2.0, 1e-12);
  EXPECT_NEAR(fc[1], 10.0 + 0.9 * 2.0 + 0.81 * 2.0, 1e-12);
  EXPECT_THROW(forecast_ets(damped, 9), Error);
}

class EtsSpecProperties : public ::testing::TestWithParam<int> {};

TEST_P(EtsSpecProperties, InvariantsHold) {
  const EtsSpec spec = ets_specs()[static_cast<std::size_t>(GetParam())];
  std::mt19937_64 rng(100 + static_cast<std::uint64_t>(GetParam()));
  std::normal_distribution<double> noise(0.0, 2.0);
  Eigen::VectorXd y = testing::trend_seasonal(16, 200.0, 1.5, {6.0, -2.0, -5.0, 1.0});
  for (auto& v : y) v += noise(rng);
  const auto fit = fit_ets(make_series(y), spec);

  // Stored SSE is reproducible from the stored parameters and initial states.
  EtsParameters params{fit.alpha, fit.beta.value_or(0.0), fit.gamma.value_or(0.0), fit.phi_damp.value_or(1.0)};
  EtsState initial{fit.initial_level, fit.initial_trend.value_or(0.0), fit.initial_seasonal.value_or(std::array<double, 4>{})};
  const double sse = ets_filter(y, spec, params, initial).errors.squaredNorm();
  EXPECT_NEAR(sse, fit.sse, 1e-9 * fit.sse);

  EXPECT_GT(fit.alpha, 0.0);
  EXPECT_LT(fit.alpha, 1.0);
  if (fit.beta) EXPECT_LE(*fit.beta, fit.alpha);
  if (fit.gamma) EXPECT_LE(*fit.gamma, 1.0 - fit.alpha);
  if (fit.phi_damp) {
    EXPECT_GE(*fit.phi_damp, 0.8);
    EXPECT_LE(*fit.phi_damp, 0.98);
  }
  if (fit.initial_seasonal) {
    const auto& s = *fit.initial_seasonal;
    EXPECT_NEAR(s[0] + s[1] + s[2] + s[3], 0.0, 1e-9);
  }

  // Shift and scale equivariance of the additive family.
  const auto base = forecast_ets(fit, 4);
  const auto shifted = forecast_ets(fit_ets(make_series(y.array() + 1000.0), spec), 4);
  const auto scaled = forecast_ets(fit_ets(make_series(3.0 * y), spec), 4);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(shifted[k], base[k] + 1000.0, 1e-4 * std::abs(base[k]));
    EXPECT_NEAR(scaled[k], 3.0 * base[k], 1e-4 * std::abs(base[k]));
  }
}

INSTANTIATE_TEST_SUITE_P(AllSpecs, EtsSpecProperties, ::testing::Range(0, 6));

TEST(AutoSelectEts, AiccNoLargerThanAnySpec) {
  Eigen::VectorXd y = local_level_series(16, 12);
  const auto series = make_series(y);
  const auto selected = auto_select_ets(series);
  for (const auto& spec : ets_specs()) EXPECT_LE(selected.aicc, fit_ets(series, spec).aicc) << to_string(spec);
}

}  // namespace
}  // namespace quartercast
