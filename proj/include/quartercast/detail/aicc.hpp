#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace quartercast::detail {

/// Gaussian AICc from a sum of squares: n ln(sse/n) + 2kn/(n-k-1).
/// The variance is floored at (1e-9 * scale)^2 so exact fits (sse == 0)
/// still rank by parsimony instead of collapsing to -inf.
inline double gaussian_aicc(double sse, double n, double k, double scale) {
  if (n - k - 1.0 <= 0.0) return std::numeric_limits<double>::infinity();
  const double resolution = std::max(1e-9 * scale, 1e-150);
  const double floor = resolution * resolution;
  const double variance = std::max(sse / n, floor);
  return n * std::log(variance) + 2.0 * k * n / (n - k - 1.0);
}

}  // namespace quartercast::detail
