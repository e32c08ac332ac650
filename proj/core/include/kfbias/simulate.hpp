#pragma once

#include <cstdint>
#include <vector>

#include "kfbias/model.hpp"
#include "kfbias/types.hpp"

namespace kfbias {

/// A simulated path under the true parameters. Regenerating with the same
/// seed is bitwise identical.
struct Trajectory {
  std::vector<Eigen::VectorXd> states;        // x_0 .. x_T (T+1 entries)
  std::vector<Eigen::VectorXd> observations;  // y_1 .. y_T
  std::uint64_t seed = 0;
  ParameterVector theta0;
};

/// Symmetric PSD square root (eigenvalues clamped at zero).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S);

/// Simulates x_0 ~ N(x0_mean, x0_cov), then per t: x_t = b(theta0, x_{t-1})
/// + sigma_eta eta_t and y_t = h(theta0, x_t) + sigma_eps eps_t.
/// Draw order from the seeded stream: x_0 first, then per step eta_t before
/// eps_t, components in index order.
Trajectory simulate(const StateSpaceModel& model, const ParameterVector& theta0,
                    int T, const Eigen::VectorXd& x0_mean,
                    const Eigen::MatrixXd& x0_cov, std::uint64_t seed);

}  // namespace kfbias
