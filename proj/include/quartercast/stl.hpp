#pragma once

#include <Eigen/Dense>

#include "quartercast/loess.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

/// y = trend + seasonal + remainder, period 4.
struct StlDecomposition {
  Eigen::VectorXd trend;
  Eigen::VectorXd seasonal;
  Eigen::VectorXd remainder;
  int period = 4;
};

struct StlOptions {
  int inner_iterations = 5;
  double trend_span = 0.75;
};

/// Seasonal-trend decomposition with a periodic seasonal (cycle-subseries
/// replaced by their means) and a degree-1 loess trend. No robustness pass.
StlDecomposition stl_decompose(const QuarterlySeries& series, const StlOptions& options = {});

/// Decompose, forecast the seasonally adjusted series with ETS (trend none or
/// additive, no seasonal), then add back the seasonal effect of each target
/// quarter.
Eigen::VectorXd stlf_forecast(const QuarterlySeries& series, int h, const StlOptions& options = {});

}  // namespace quartercast
