#include "quartercast/stl.hpp"
#include <array>

#include "quartercast/error.hpp"
#include "quartercast/ets.hpp"

namespace quartercast {
namespace {

constexpr int kPeriod = 4;

Eigen::VectorXd moving_average(const Eigen::VectorXd& v, Eigen::Index len) {
  const Eigen::Index m = v.size() - len + 1;
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out[i] = v.segment(i, len).mean();
  return out;
}

Eigen::VectorXd positions(Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)); }

}  // namespace

StlDecomposition stl_decompose(const QuarterlySeries& series, const StlOptions& options) {
  const Eigen::VectorXd& y = series.values();
  const Eigen::Index n = y.size();
  if (n < 2 * kPeriod) {
    throw Error(ErrorKind::insufficient_data, "STL needs at least 8 points, have " + std::to_string(n));
  }
  const Eigen::VectorXd t = positions(n);
  const LoessParams trend_params{options.trend_span, 1};
  // Low-pass window: smallest odd number >= period, as a fraction of n.
  const LoessParams lowpass_params{std::min(1.0, (kPeriod + 1.0) / static_cast<double>(n)), 1};

  StlDecomposition out;
  out.trend = Eigen::VectorXd::Zero(n);
  out.seasonal = Eigen::VectorXd::Zero(n);
  for (int iter = 0; iter < options.inner_iterations; ++iter) {
    const Eigen::VectorXd detrended = y - out.trend;

    std::array<double, kPeriod> means{};
    std::array<int, kPeriod> counts{};
    for (Eigen::Index i = 0; i < n; ++i) {
      means[static_cast<std::size_t>(i % kPeriod)] += detrended[i];
      ++counts[static_cast<std::size_t>(i % kPeriod)];
    }
    for (std::size_t j = 0; j < kPeriod; ++j) means[j] /= counts[j];

    // Cycle-subseries values extended one period on each side.
    Eigen::VectorXd cycle(n + 2 * kPeriod);
    for (Eigen::Index i = 0; i < cycle.size(); ++i) {
      cycle[i] = means[static_cast<std::size_t>((i - kPeriod + 2 * kPeriod) % kPeriod)];
    }
    const Eigen::VectorXd smoothed =
        moving_average(moving_average(moving_average(cycle, kPeriod), kPeriod), 3);
    const Eigen::VectorXd lowpass = loess_smooth(t, smoothed, lowpass_params, t);
    const Eigen::VectorXd raw = cycle.segment(kPeriod, n) - lowpass;
    // The low-pass of an exactly periodic input is constant up to rounding;
    // averaging per phase keeps the seasonal exactly periodic.
    std::array<double, kPeriod> phase{};
    for (Eigen::Index i = 0; i < n; ++i) phase[static_cast<std::size_t>(i % kPeriod)] += raw[i];
    for (std::size_t j = 0; j < kPeriod; ++j) phase[j] /= counts[j];
    for (Eigen::Index i = 0; i < n; ++i) out.seasonal[i] = phase[static_cast<std::size_t>(i % kPeriod)];

    const Eigen::VectorXd adjusted = y - out.seasonal;
    out.trend = loess_smooth(t, adjusted, trend_params, t);
  }
  out.remainder = y - out.trend - out.seasonal;
  return out;
}

Eigen::VectorXd stlf_forecast(const QuarterlySeries& series, int h, const StlOptions& options) {
  if (h < 1 || h > 8) throw Error(ErrorKind::validation, "STL forecast horizon must be in 1..8");
  const auto decomposition = stl_decompose(series, options);
  const Eigen::Index n = series.size();
  const QuarterlySeries adjusted(series.id(), series.first(), series.values() - decomposition.seasonal);
  const auto fit =
      auto_select_ets(adjusted, {EtsSpec{Trend::none, Season::none}, EtsSpec{Trend::additive, Season::none}});
  Eigen::VectorXd out = forecast_ets(fit, h);
  for (int k = 1; k <= h; ++k) out[k - 1] += decomposition.seasonal[n - kPeriod + (k - 1) % kPeriod];
  return out;
}

}  // namespace quartercast
