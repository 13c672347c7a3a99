#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "quartercast/error.hpp"

namespace quartercast {

struct LoessParams {
  double span = 0.75;  // fraction of points in each local window, (0, 1]
  int degree = 1;      // 0, 1 or 2
};

/// Number of points in each local window for n observations.
inline Eigen::Index loess_window(const LoessParams& params, Eigen::Index n) {
  const auto q = static_cast<Eigen::Index>(std::ceil(params.span * static_cast<double>(n) - 1e-12));
  return std::min(n, std::max<Eigen::Index>(params.degree + 2, q));
}

/// Local polynomial regression with tricube weights over the nearest
/// loess_window() points, evaluated at each entry of `at`. `x` must be
/// strictly increasing. A singular local design falls back to the weighted
/// mean.
template <typename DerivedX, typename DerivedY, typename DerivedE>
Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, 1> loess_smooth(const Eigen::MatrixBase<DerivedX>& x,
                                                                        const Eigen::MatrixBase<DerivedY>& y,
                                                                        const LoessParams& params,
                                                                        const Eigen::MatrixBase<DerivedE>& at) {
  using Scalar = typename DerivedY::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const Eigen::Index n = x.size();
  if (y.size() != n) throw Error(ErrorKind::validation, "loess: x and y differ in length");
  if (params.degree < 0 || params.degree > 2) throw Error(ErrorKind::validation, "loess degree must be 0, 1 or 2");
  if (!(params.span > 0.0 && params.span <= 1.0)) throw Error(ErrorKind::validation, "loess span must be in (0, 1]");
  if (n < params.degree + 2) throw Error(ErrorKind::insufficient_data, "loess needs at least degree + 2 points");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw Error(ErrorKind::validation, "loess: x must be strictly increasing");
  }

  const Eigen::Index q = loess_window(params, n);
  Vec out(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const Scalar x0 = at[k];
    // Slide a contiguous window of q points towards x0.
    Eigen::Index lo = 0;
    while (lo + q < n && std::abs(x[lo + q] - x0) < std::abs(x[lo] - x0)) ++lo;
    const Eigen::Index hi = lo + q;  // exclusive
    const Scalar dmax = std::max(std::abs(x[lo] - x0), std::abs(x[hi - 1] - x0));

    Vec w(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      if (dmax <= Scalar(0)) {
        w[i] = Scalar(1);
      } else {
        const Scalar r = std::min<Scalar>(Scalar(1), std::abs(x[lo + i] - x0) / dmax);
        const Scalar c = Scalar(1) - r * r * r;
        w[i] = c * c * c;
      }
    }

    const Scalar wsum = w.sum();
    const Vec yw = y.segment(lo, q);
    const Scalar weighted_mean = wsum > Scalar(0) ? Scalar(w.dot(yw) / wsum) : Scalar(yw.mean());
    if (params.degree == 0 || dmax <= Scalar(0)) {
      out[k] = weighted_mean;
      continue;
    }

    // Centred design so the fitted value at x0 is the intercept.
    Mat design(q, params.degree + 1);
    for (Eigen::Index i = 0; i < q; ++i) {
      const Scalar u = (x[lo + i] - x0) / dmax;
      Scalar power = Scalar(1);
      for (int j = 0; j <= params.degree; ++j) {
        design(i, j) = power;
        power *= u;
      }
    }
    const Vec sqrt_w = w.array().sqrt();
    const Mat a = sqrt_w.asDiagonal() * design;
    const Vec b = sqrt_w.asDiagonal() * yw;
    Eigen::ColPivHouseholderQR<Mat> qr(a);
    if (qr.rank() < params.degree + 1) {
      out[k] = weighted_mean;
      continue;
    }
    out[k] = Vec(qr.solve(b))[0];
  }
  return out;
}

}  // namespace quartercast
