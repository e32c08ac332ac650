#pragma once

#include <span>
#include <vector>

#include "kfbias/model.hpp"
#include "kfbias/types.hpp"

namespace kfbias {

struct FilterInit {
  Eigen::VectorXd x0;  // \hat x_0
  Eigen::MatrixXd P0;  // symmetric PSD
};

/// Full filter state at time t (t counts observations, starting at 1).
struct FilterState {
  int t = 0;
  Eigen::VectorXd xhat_pred;   // \hat x_t^-
  Eigen::MatrixXd P_pred;      // prior covariance
  Eigen::MatrixXd gain;        // K_t, n_x x n_y
  Eigen::VectorXd innovation;  // y_t - d_t - C \hat x_t^-
  Eigen::VectorXd xhat;        // \hat x_t
  Eigen::MatrixXd P;           // posterior covariance (symmetrized)
};

/// Prediction step: xhat_pred = u + A xhat_prev, P_pred = A P A' + Q.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict(
    const Eigen::VectorXd& xhat_prev, const Eigen::MatrixXd& P_prev,
    const SystemMatrices& sys);

/// Measurement update. The innovation covariance C P_pred C' + R is factored
/// as a symmetric positive-definite matrix; a condition estimate above 1e12
/// (or a non-positive eigenvalue) raises NumericError.
FilterState update(const Eigen::VectorXd& xhat_pred,
                   const Eigen::MatrixXd& P_pred, const SystemMatrices& sys,
                   const Eigen::VectorXd& y);

/// Runs the (extended) Kalman filter over the observation sequence. For
/// linear models each step uses the model's exact matrices; otherwise the
/// model is re-linearized once per step at (xhat_{t-1}, xhat_t^-).
std::vector<FilterState> run_filter(const StateSpaceModel& model,
                                    const ParameterVector& theta,
                                    std::span<const Eigen::VectorXd> observations,
                                    const FilterInit& init);

/// Default initialization: x0 = 0 and P0 the stationary state covariance
/// under theta (requires the linearization of A at x = 0 to be stable).
FilterInit default_init(const StateSpaceModel& model,
                        const ParameterVector& theta);

struct RiccatiResult {
  Eigen::MatrixXd P_pred;  // fixed point of the prediction covariance
  Eigen::MatrixXd gain;    // K_inf
  int iterations = 0;
};

/// Fixed point of the discrete Riccati prediction/update map, to tol in the
/// matrix max-norm. Throws NumericError with the last residual on
/// non-convergence.
RiccatiResult steady_state_riccati(const SystemMatrices& sys,
                                   double tol = 1e-12, int max_iter = 100000);

/// Solves P = A P A' + Q exactly (vectorized linear solve); requires the
/// spectral radius of A to be < 1.
Eigen::MatrixXd stationary_state_covariance(const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& Q);

}  // namespace kfbias
