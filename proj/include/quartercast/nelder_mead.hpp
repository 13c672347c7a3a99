#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace quartercast {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  double tolerance = 1e-8;  // relative spread of objective values across the simplex
  int max_iterations = 500;
  double initial_step = 0.1;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex minimisation. Non-finite objective values act as walls.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const NelderMeadOptions& options = {});

struct RestartOptions {
  int restarts = 3;
  double jitter = 0.1;
  std::uint64_t seed = 0x51ed5eedULL;
};

/// nelder_mead from x0, then up to `restarts` seeded restarts around the best
/// point; stops restarting once a restart fails to improve.
NelderMeadResult minimize_with_restarts(const Objective& f, const Eigen::VectorXd& x0,
                                        const NelderMeadOptions& options = {},
                                        const RestartOptions& restart = {});

}  // namespace quartercast
