#include "quartercast/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace quartercast {
namespace {

double eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

bool spread_converged(double best, double worst, double tol) {
  if (!std::isfinite(worst)) return false;
  return worst - best <= tol * 0.5 * (std::abs(best) + std::abs(worst)) || worst == best;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  NelderMeadResult result;
  if (n == 0) {
    result.x = x0;
    result.value = eval(f, x0);
    result.converged = true;
    return result;
  }

  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> values(simplex.size());
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += options.initial_step;
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(f, simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second_worst = order[order.size() - 2];
    if (spread_converged(values[best], values[worst], options.tolerance)) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + kReflect * (centroid - simplex[worst]);
    const double f_reflected = eval(f, reflected);
    if (f_reflected < values[best]) {
      const Eigen::VectorXd expanded = centroid + kExpand * (reflected - centroid);
      const double f_expanded = eval(f, expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + kContract * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + kContract * (simplex[worst] - centroid));
    const double f_contracted = eval(f, contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + kShrink * (simplex[i] - simplex[best]);
      values[i] = eval(f, simplex[i]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = iter;
  return result;
}

NelderMeadResult minimize_with_restarts(const Objective& f, const Eigen::VectorXd& x0,
                                        const NelderMeadOptions& options, const RestartOptions& restart) {
  auto best = nelder_mead(f, x0, options);
  std::mt19937_64 rng(restart.seed);
  std::normal_distribution<double> jitter(0.0, restart.jitter);
  for (int r = 0; r < restart.restarts; ++r) {
    Eigen::VectorXd start = best.x;
    for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(rng);
    auto next = nelder_mead(f, start, options);
    const bool improved =
        next.value < best.value - options.tolerance * std::abs(best.value) && std::isfinite(next.value);
    if (next.value < best.value) best = std::move(next);
    if (!improved) break;
  }
  return best;
}

}  // namespace quartercast
