#include "quartercast/arima.hpp"

#include <cmath>
#include <limits>

#include "quartercast/detail/aicc.hpp"

namespace quartercast {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coefficients c of 1 - c1 B - c2 B^2 - ... for the product of a nonseasonal
// factor (1 - sum a_i B^i) and a seasonal factor (1 - sum A_j B^{sj}).
Eigen::VectorXd multiply_lag_polynomials(const Eigen::VectorXd& a, const Eigen::VectorXd& seasonal, int s) {
  const Eigen::Index degree = a.size() + s * seasonal.size();
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(a.size() + 1);
  lhs[0] = 1.0;
  lhs.tail(a.size()) = -a;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s * seasonal.size() + 1);
  rhs[0] = 1.0;
  for (Eigen::Index j = 0; j < seasonal.size(); ++j) rhs[s * (j + 1)] = -seasonal[j];
  Eigen::VectorXd product = Eigen::VectorXd::Zero(degree + 1);
  for (Eigen::Index i = 0; i < lhs.size(); ++i) {
    for (Eigen::Index j = 0; j < rhs.size(); ++j) product[i + j] += lhs[i] * rhs[j];
  }
  return -product.tail(degree);
}

// Stationarity of 1 - a1 B - a2 B^2 (degree <= 2).
bool stationary_factor(const Eigen::VectorXd& a) {
  if (a.size() == 0) return true;
  if (a.size() == 1) return std::abs(a[0]) < 1.0;
  return a[0] + a[1] < 1.0 && a[1] - a[0] < 1.0 && std::abs(a[1]) < 1.0;
}

struct Unpacked {
  Eigen::VectorXd ar, ma, sar, sma;
};

Unpacked unpack(const ArimaOrder& o, const Eigen::VectorXd& params) {
  Unpacked u;
  Eigen::Index at = 0;
  u.ar = params.segment(at, o.p);
  at += o.p;
  u.ma = params.segment(at, o.q);
  at += o.q;
  u.sar = params.segment(at, o.P);
  at += o.P;
  u.sma = params.segment(at, o.Q);
  return u;
}

// Expanded (1-B)^d (1-B^s)^D as coefficients c0 = 1, c1, ..., c_{d+sD}.
Eigen::VectorXd differencing_polynomial(int d, int D, int s) {
  Eigen::VectorXd poly = Eigen::VectorXd::Ones(1);
  auto times = [&poly](int lag) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(poly.size() + lag);
    next.head(poly.size()) += poly;
    next.tail(poly.size()) -= poly;
    poly = next;
  };
  for (int i = 0; i < d; ++i) times(1);
  for (int i = 0; i < D; ++i) times(s);
  return poly;
}

double scale_of(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::string to_string(const ArimaOrder& o) {
  return "(" + std::to_string(o.p) + "," + std::to_string(o.d) + "," + std::to_string(o.q) + ")(" +
         std::to_string(o.P) + "," + std::to_string(o.D) + "," + std::to_string(o.Q) + ")[4]";
}

bool admissible(const ArimaOrder& order, const Eigen::VectorXd& params) {
  const auto u = unpack(order, params);
  // MA factor 1 + t1 B + t2 B^2 is invertible iff 1 - (-t1) B - (-t2) B^2 is stationary.
  return stationary_factor(u.ar) && stationary_factor(u.sar) && stationary_factor(-u.ma) &&
         stationary_factor(-u.sma);
}

Eigen::VectorXd css_residuals(const Eigen::VectorXd& z, const ArimaOrder& order, const Eigen::VectorXd& params) {
  const auto u = unpack(order, params);
  const Eigen::VectorXd ar = multiply_lag_polynomials(u.ar, u.sar, kSeasonalPeriod);
  // MA polynomial uses + signs: 1 + sum m_j B^j.
  const Eigen::VectorXd ma = -multiply_lag_polynomials(-u.ma, -u.sma, kSeasonalPeriod);
  const Eigen::Index n = z.size();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double value = z[t];
    for (Eigen::Index i = 0; i < ar.size() && i < t; ++i) value -= ar[i] * z[t - i - 1];
    for (Eigen::Index j = 0; j < ma.size() && j < t; ++j) value -= ma[j] * e[t - j - 1];
    e[t] = value;
  }
  return e;
}

ArimaFit fit_arima(const QuarterlySeries& series, const ArimaOrder& order, const ArimaOptions& options) {
  if (order.p < 0 || order.q < 0 || order.P < 0 || order.Q < 0 || order.d < 0 || order.D < 0) {
    throw Error(ErrorKind::validation, "negative ARIMA order");
  }
  const Eigen::VectorXd w = difference(series.values(), order.d, order.D, kSeasonalPeriod);
  const Eigen::Index m = w.size();
  if (m < order.free_parameters() + 3) {
    throw Error(ErrorKind::insufficient_data, "ARIMA" + to_string(order) + " needs " +
                                                  std::to_string(order.free_parameters() + 3) +
                                                  " differenced points, have " + std::to_string(m));
  }
  if (!w.allFinite()) throw Error(ErrorKind::nonconvergence, "non-finite values in series '" + series.id() + "'");

  std::optional<double> intercept;
  Eigen::VectorXd z = w;
  if (order.has_intercept()) {
    intercept = w.mean();
    z.array() -= *intercept;
  }

  auto css = [&](const Eigen::VectorXd& params) {
    if (!admissible(order, params)) return kInf;
    return css_residuals(z, order, params).squaredNorm();
  };

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(order.coefficient_count());
  const auto best = minimize_with_restarts(css, x0, options.optimizer, options.restarts);
  if (!std::isfinite(best.value)) {
    throw Error(ErrorKind::nonconvergence, "ARIMA" + to_string(order) + " left the admissible region");
  }

  const auto u = unpack(order, best.x);
  ArimaFit fit;
  fit.order = order;
  fit.ar = u.ar;
  fit.ma = u.ma;
  fit.seasonal_ar = u.sar;
  fit.seasonal_ma = u.sma;
  fit.intercept = intercept;
  fit.residuals = css_residuals(z, order, best.x);
  fit.css = fit.residuals.squaredNorm();
  fit.sigma2 = fit.css / static_cast<double>(m);
  fit.aicc = detail::gaussian_aicc(fit.css, static_cast<double>(m), order.free_parameters() + 1.0,
                                   scale_of(series.values()));
  fit.training = series;
  return fit;
}

std::vector<ArimaOrder> arima_grid() {
  std::vector<ArimaOrder> grid;
  for (int p = 0; p <= 2; ++p)
    for (int d = 0; d <= 1; ++d)
      for (int q = 0; q <= 2; ++q)
        for (int P = 0; P <= 1; ++P)
          for (int D = 0; D <= 1; ++D)
            for (int Q = 0; Q <= 1; ++Q) grid.push_back({p, d, q, P, D, Q});
  return grid;
}

ArimaFit auto_select(const QuarterlySeries& series, const ArimaOptions& options) {
  if (series.size() < 10) {
    throw Error(ErrorKind::insufficient_data, "ARIMA auto-selection needs at least 10 points");
  }
  std::optional<ArimaFit> best;
  for (const auto& order : arima_grid()) {
    try {
      auto fit = fit_arima(series, order, options);
      if (!best || fit.aicc < best->aicc) best = std::move(fit);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::nonconvergence) throw;
    }
  }
  if (!best) throw Error(ErrorKind::nonconvergence, "no ARIMA candidate converged for '" + series.id() + "'");
  return *std::move(best);
}

Eigen::VectorXd forecast_arima(const ArimaFit& fit, int h) {
  if (h < 1 || h > 8) throw Error(ErrorKind::validation, "ARIMA forecast horizon must be in 1..8");
  const auto& o = fit.order;
  const Eigen::VectorXd& y = fit.training.values();
  const Eigen::VectorXd w = difference(y, o.d, o.D, kSeasonalPeriod);
  const double mu = fit.intercept.value_or(0.0);

  const Eigen::VectorXd ar = multiply_lag_polynomials(fit.ar, fit.seasonal_ar, kSeasonalPeriod);
  const Eigen::VectorXd ma = -multiply_lag_polynomials(-fit.ma, -fit.seasonal_ma, kSeasonalPeriod);

  const Eigen::Index m = w.size();
  Eigen::VectorXd z(m + h);
  z.head(m) = w.array() - mu;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m + h);
  e.head(m) = fit.residuals;
  for (Eigen::Index t = m; t < m + h; ++t) {
    double value = 0.0;
    for (Eigen::Index i = 0; i < ar.size() && i < t; ++i) value += ar[i] * z[t - i - 1];
    for (Eigen::Index j = 0; j < ma.size() && j < t; ++j) value += ma[j] * e[t - j - 1];
    z[t] = value;
  }

  // Undo differencing: y_t = w_t - sum_{i>=1} c_i y_{t-i}.
  const Eigen::VectorXd c = differencing_polynomial(o.d, o.D, kSeasonalPeriod);
  const Eigen::Index n = y.size();
  Eigen::VectorXd full(n + h);
  full.head(n) = y;
  for (Eigen::Index k = 0; k < h; ++k) {
    const Eigen::Index t = n + k;
    double value = z[m + k] + mu;
    for (Eigen::Index i = 1; i < c.size(); ++i) value -= c[i] * full[t - i];
    full[t] = value;
  }
  return full.tail(h);
}

}  // namespace quartercast
