#pragma once

#include <memory>

#include "kfbias/types.hpp"

namespace kfbias {

/// Evaluation points used by the EKF linearization: A and u_t are taken at
/// the previous posterior mean, C and d_t at the current prior mean.
struct LinearizationPoint {
  Eigen::VectorXd xhat_prev;  // \hat x_{t-1}
  Eigen::VectorXd xhat_pred;  // \hat x_t^-
};

/// Behavior contract for a state space model
///
///   x_t = b(theta, x_{t-1}) + sigma_eta(theta) * eta_t
///   y_t = h(theta, x_t)     + sigma_eps(theta) * eps_t.
///
/// Models are immutable after construction and all member functions are pure,
/// so instances may be shared freely across threads.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  virtual bool is_linear_in_x() const = 0;

  virtual Eigen::VectorXd b(const ParameterVector& theta,
                            const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd h(const ParameterVector& theta,
                            const Eigen::VectorXd& x) const = 0;
  /// db/dx at (theta, x).
  virtual Eigen::MatrixXd b_jacobian(const ParameterVector& theta,
                                     const Eigen::VectorXd& x) const = 0;
  /// dh/dx at (theta, x).
  virtual Eigen::MatrixXd h_jacobian(const ParameterVector& theta,
                                     const Eigen::VectorXd& x) const = 0;

  virtual Eigen::MatrixXd sigma_eta(const ParameterVector& theta) const = 0;
  virtual Eigen::MatrixXd sigma_eps(const ParameterVector& theta) const = 0;

  /// Whether analytic theta-derivatives are provided; when false,
  /// theta_derivatives() falls back to central finite differences.
  virtual bool has_analytic_theta_derivatives() const { return false; }

  /// Derivatives of (u_t, A, d_t, C, sigma_eta, sigma_eps) with respect to
  /// each theta component, holding the linearization point fixed.
  virtual DerivativeBundle theta_derivatives(const ParameterVector& theta,
                                             const LinearizationPoint& at) const;
};

/// EKF linearization at the given points: A = db/dx(theta, xhat_prev) with
/// the affine offset u_t = b - A xhat_prev, and C = dh/dx(theta, xhat_pred)
/// with d_t = h - C xhat_pred. For a model linear in x this returns the
/// exact system.
SystemMatrices linearize_ekf(const StateSpaceModel& model,
                             const ParameterVector& theta,
                             const Eigen::VectorXd& xhat_prev,
                             const Eigen::VectorXd& xhat_pred);

/// Central-difference theta-derivatives of the linearized system at a fixed
/// linearization point, with a uniform step (must be > 0).
DerivativeBundle finite_diff_theta_derivatives(const StateSpaceModel& model,
                                               const ParameterVector& theta,
                                               const LinearizationPoint& at,
                                               double step);

/// Same, with the default per-component step 1e-6 * max(1, |theta_k|).
DerivativeBundle finite_diff_theta_derivatives(const StateSpaceModel& model,
                                               const ParameterVector& theta,
                                               const LinearizationPoint& at);

/// Linear AR(1) with measurement noise:
///   x_{t+1} = phi x_t + sqrt(q) eta,   y_t = x_t + sqrt(rr) eps.
/// theta = (phi); analytic derivatives dA/dphi = [1], all others zero.
class Ar1Model final : public StateSpaceModel {
 public:
  Ar1Model(double q, double rr);

  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 1; }
  bool is_linear_in_x() const override { return true; }

  Eigen::VectorXd b(const ParameterVector& theta,
                    const Eigen::VectorXd& x) const override;
  Eigen::VectorXd h(const ParameterVector& theta,
                    const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd b_jacobian(const ParameterVector& theta,
                             const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd h_jacobian(const ParameterVector& theta,
                             const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd sigma_eta(const ParameterVector& theta) const override;
  Eigen::MatrixXd sigma_eps(const ParameterVector& theta) const override;

  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector& theta,
                                     const LinearizationPoint& at) const override;

 private:
  double sqrt_q_;
  double sqrt_r_;
};

/// Scalar test model b(theta, x) = theta * tanh(x), h(theta, x) = x with
/// constant noise scales; exercises the EKF path with analytic derivatives.
class TanhModel final : public StateSpaceModel {
 public:
  TanhModel(double q, double rr);

  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 1; }
  bool is_linear_in_x() const override { return false; }

  Eigen::VectorXd b(const ParameterVector& theta,
                    const Eigen::VectorXd& x) const override;
  Eigen::VectorXd h(const ParameterVector& theta,
                    const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd b_jacobian(const ParameterVector& theta,
                             const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd h_jacobian(const ParameterVector& theta,
                             const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd sigma_eta(const ParameterVector& theta) const override;
  Eigen::MatrixXd sigma_eps(const ParameterVector& theta) const override;

  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector& theta,
                                     const LinearizationPoint& at) const override;

 private:
  double sqrt_q_;
  double sqrt_r_;
};

/// phi is the AR coefficient used as the (only) model parameter; q and rr are
/// the state and observation noise variances. Negative variances are domain
/// errors. The returned model is evaluated at whatever theta the caller
/// passes; phi here only documents the intended true parameter.
std::unique_ptr<StateSpaceModel> make_ar1(double phi, double q, double rr);

std::unique_ptr<StateSpaceModel> make_tanh(double q, double rr);

}  // namespace kfbias
