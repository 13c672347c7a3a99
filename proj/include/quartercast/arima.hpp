#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quartercast/error.hpp"
#include "quartercast/nelder_mead.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

inline constexpr int kSeasonalPeriod = 4;

/// (p,d,q)(P,D,Q)_4
struct ArimaOrder {
  int p = 0, d = 0, q = 0;
  int P = 0, D = 0, Q = 0;

  int coefficient_count() const noexcept { return p + q + P + Q; }
  bool has_intercept() const noexcept { return d + D == 0; }
  /// Estimated quantities excluding the innovation variance.
  int free_parameters() const noexcept { return coefficient_count() + (has_intercept() ? 1 : 0); }

  friend auto operator<=>(const ArimaOrder&, const ArimaOrder&) = default;
};

std::string to_string(const ArimaOrder& order);

/// Applies d lag-1 differences then D lag-s differences.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> difference(const Eigen::MatrixBase<Derived>& values,
                                                                      int d, int D, int s = kSeasonalPeriod) {
  using Vec = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  if (d < 0 || D < 0 || s < 1) throw Error(ErrorKind::validation, "negative differencing order");
  if (values.size() <= d + s * D) {
    throw Error(ErrorKind::insufficient_data, "series too short to difference");
  }
  Vec out = values;
  for (int i = 0; i < d; ++i) {
    const Eigen::Index m = out.size() - 1;
    out = (out.tail(m) - out.head(m)).eval();
  }
  for (int i = 0; i < D; ++i) {
    const Eigen::Index m = out.size() - s;
    out = (out.tail(m) - out.head(m)).eval();
  }
  return out;
}

struct ArimaFit {
  ArimaOrder order;
  Eigen::VectorXd ar;
  Eigen::VectorXd ma;
  Eigen::VectorXd seasonal_ar;
  Eigen::VectorXd seasonal_ma;
  std::optional<double> intercept;  // mean of the series when d + D == 0
  double css = 0.0;
  double sigma2 = 0.0;
  double aicc = 0.0;
  QuarterlySeries training;
  Eigen::VectorXd residuals;  // one per differenced observation
};

struct ArimaOptions {
  NelderMeadOptions optimizer{};
  RestartOptions restarts{};
};

/// Conditional-sum-of-squares estimate for a fixed order.
ArimaFit fit_arima(const QuarterlySeries& series, const ArimaOrder& order, const ArimaOptions& options = {});

/// The bounded search grid p,q <= 2, P,Q,d,D <= 1 in lexicographic order.
std::vector<ArimaOrder> arima_grid();

/// Lowest-AICc fit over arima_grid(); earlier grid entries win ties.
ArimaFit auto_select(const QuarterlySeries& series, const ArimaOptions& options = {});

/// Point forecasts for steps 1..h (1 <= h <= 8).
Eigen::VectorXd forecast_arima(const ArimaFit& fit, int h);

/// One-step CSS residuals of a centred, differenced series. Exposed for tests.
Eigen::VectorXd css_residuals(const Eigen::VectorXd& z, const ArimaOrder& order, const Eigen::VectorXd& params);

/// True when every AR factor is stationary and every MA factor invertible.
bool admissible(const ArimaOrder& order, const Eigen::VectorXd& params);

}  // namespace quartercast
