#pragma once

// Shared test fixtures: small models exercising specific parameter
// dependences, and independent scalar oracles the implementation is checked
// against.

#include <cmath>

#include <kfbias/model.hpp>

namespace kfbias::test {

// Reference scenario constants.
inline constexpr double kPhi0 = 0.7;
inline constexpr double kQ = 0.3;
inline constexpr double kR = 0.5;
inline constexpr double kPhiBiased = 0.85;
inline constexpr double kEps = 0.15;
// Q / (1 - phi0^2)
inline constexpr double kStationaryVar = 0.588235294117647;

// Scalar Riccati fixed point: iterates P- <- phi^2 R P-/(P- + R) + Q.
// Independent of the matrix implementation in core.
struct ScalarRiccati {
  double P_pred;
  double gain;
};
inline ScalarRiccati scalar_riccati_oracle(double phi, double q, double r,
                                           double tol = 1e-15) {
  double P = q;
  for (int i = 0; i < 1000000; ++i) {
    const double Pn = phi * phi * (r * P / (P + r)) + q;
    if (std::abs(Pn - P) < tol) {
      P = Pn;
      break;
    }
    P = Pn;
  }
  return {P, P / (P + r)};
}

// Values computed with the oracle above (and cross-checked against the
// closed-form root of P^2 - (phi^2 R - R + Q) P - Q R = 0):
inline constexpr double kPpredInfBiased = 0.476226302607814;   // phi = 0.85
inline constexpr double kGainInfBiased = 0.487823675038934;
inline constexpr double kPpredInfTrue = 0.410451350042759;     // phi = 0.7
inline constexpr double kGainInfTrue = 0.450821836909223;

// b(theta, x) = a x + u(theta) with theta-free A, C, noise scales: the
// Kalman gain does not depend on theta, so the first-order error recursion
// is exact up to the Taylor remainder of u.
class ShiftModel final : public StateSpaceModel {
 public:
  // u(theta) = sin(theta) when curved, 0.4 * theta when affine.
  ShiftModel(double a, double q, double rr, bool curved)
      : a_(a), sq_(std::sqrt(q)), sr_(std::sqrt(rr)), curved_(curved) {}

  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 1; }
  bool is_linear_in_x() const override { return true; }

  Eigen::VectorXd b(const ParameterVector& th, const Eigen::VectorXd& x) const override {
    return Eigen::VectorXd::Constant(1, a_ * x(0) + shift(th[0]));
  }
  Eigen::VectorXd h(const ParameterVector&, const Eigen::VectorXd& x) const override {
    return x;
  }
  Eigen::MatrixXd b_jacobian(const ParameterVector&, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, a_);
  }
  Eigen::MatrixXd h_jacobian(const ParameterVector&, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(1, 1);
  }
  Eigen::MatrixXd sigma_eta(const ParameterVector&) const override {
    return Eigen::MatrixXd::Constant(1, 1, sq_);
  }
  Eigen::MatrixXd sigma_eps(const ParameterVector&) const override {
    return Eigen::MatrixXd::Constant(1, 1, sr_);
  }
  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector& th,
                                     const LinearizationPoint&) const override {
    DerivativeBundle d;
    d.du = {Eigen::VectorXd::Constant(1, dshift(th[0]))};
    d.dA = {Eigen::MatrixXd::Zero(1, 1)};
    d.dd = {Eigen::VectorXd::Zero(1)};
    d.dC = {Eigen::MatrixXd::Zero(1, 1)};
    d.dsigma_eta = {Eigen::MatrixXd::Zero(1, 1)};
    d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1)};
    return d;
  }

 private:
  double shift(double th) const { return curved_ ? std::sin(th) : 0.4 * th; }
  double dshift(double th) const { return curved_ ? std::cos(th) : 0.4; }
  double a_, sq_, sr_;
  bool curved_;
};

// b(theta, x) = theta_1 x, h(theta, x) = theta_2 x: a two-parameter model
// whose observation map depends on theta (dC/dtheta_2 = 1).
class ThetaObsModel final : public StateSpaceModel {
 public:
  ThetaObsModel(double q, double rr) : sq_(std::sqrt(q)), sr_(std::sqrt(rr)) {}

  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 2; }
  bool is_linear_in_x() const override { return true; }

  Eigen::VectorXd b(const ParameterVector& th, const Eigen::VectorXd& x) const override {
    return th[0] * x;
  }
  Eigen::VectorXd h(const ParameterVector& th, const Eigen::VectorXd& x) const override {
    return th[1] * x;
  }
  Eigen::MatrixXd b_jacobian(const ParameterVector& th, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, th[0]);
  }
  Eigen::MatrixXd h_jacobian(const ParameterVector& th, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, th[1]);
  }
  Eigen::MatrixXd sigma_eta(const ParameterVector&) const override {
    return Eigen::MatrixXd::Constant(1, 1, sq_);
  }
  Eigen::MatrixXd sigma_eps(const ParameterVector&) const override {
    return Eigen::MatrixXd::Constant(1, 1, sr_);
  }
  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector&,
                                     const LinearizationPoint&) const override {
    DerivativeBundle d;
    d.du = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    d.dA = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.dd = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    d.dC = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1)};
    d.dsigma_eta = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    return d;
  }

 private:
  double sq_, sr_;
};

// b(theta, x) = a x, sigma_eta = theta_1, sigma_eps = theta_2: noise scales
// depending on theta, exercising the O(eps) terms of the noise moments.
class NoiseScaleModel final : public StateSpaceModel {
 public:
  explicit NoiseScaleModel(double a) : a_(a) {}

  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 2; }
  bool is_linear_in_x() const override { return true; }

  Eigen::VectorXd b(const ParameterVector&, const Eigen::VectorXd& x) const override {
    return a_ * x;
  }
  Eigen::VectorXd h(const ParameterVector&, const Eigen::VectorXd& x) const override {
    return x;
  }
  Eigen::MatrixXd b_jacobian(const ParameterVector&, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, a_);
  }
  Eigen::MatrixXd h_jacobian(const ParameterVector&, const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(1, 1);
  }
  Eigen::MatrixXd sigma_eta(const ParameterVector& th) const override {
    return Eigen::MatrixXd::Constant(1, 1, th[0]);
  }
  Eigen::MatrixXd sigma_eps(const ParameterVector& th) const override {
    return Eigen::MatrixXd::Constant(1, 1, th[1]);
  }
  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector&,
                                     const LinearizationPoint&) const override {
    DerivativeBundle d;
    d.du = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    d.dA = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.dd = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    d.dC = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.dsigma_eta = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1)};
    return d;
  }

 private:
  double a_;
};

// Two-state, one-observation linear model with theta on the transition
// diagonal: exercises the genuinely matrix-valued paths (non-square C,
// non-symmetric noise cross blocks, 4x4 augmented recursion).
class TwoStateModel final : public StateSpaceModel {
 public:
  TwoStateModel() {
    C_.resize(1, 2);
    C_ << 1.0, 0.5;
    se_.resize(2, 2);
    se_ << 0.5, 0.0, 0.2, 0.4;
    sv_ = Eigen::MatrixXd::Constant(1, 1, 0.6);
  }

  Eigen::Index state_dim() const override { return 2; }
  Eigen::Index obs_dim() const override { return 1; }
  Eigen::Index param_dim() const override { return 2; }
  bool is_linear_in_x() const override { return true; }

  Eigen::MatrixXd transition(const ParameterVector& th) const {
    Eigen::MatrixXd A(2, 2);
    A << th[0], 0.2, 0.1, th[1];
    return A;
  }
  Eigen::VectorXd b(const ParameterVector& th, const Eigen::VectorXd& x) const override {
    return transition(th) * x;
  }
  Eigen::VectorXd h(const ParameterVector&, const Eigen::VectorXd& x) const override {
    return C_ * x;
  }
  Eigen::MatrixXd b_jacobian(const ParameterVector& th, const Eigen::VectorXd&) const override {
    return transition(th);
  }
  Eigen::MatrixXd h_jacobian(const ParameterVector&, const Eigen::VectorXd&) const override {
    return C_;
  }
  Eigen::MatrixXd sigma_eta(const ParameterVector&) const override { return se_; }
  Eigen::MatrixXd sigma_eps(const ParameterVector&) const override { return sv_; }

  bool has_analytic_theta_derivatives() const override { return true; }
  DerivativeBundle theta_derivatives(const ParameterVector&,
                                     const LinearizationPoint&) const override {
    DerivativeBundle d;
    Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(2, 2);
    d1(0, 0) = 1.0;
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(2, 2);
    d2(1, 1) = 1.0;
    d.du = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
    d.dA = {d1, d2};
    d.dd = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    d.dC = {Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2)};
    d.dsigma_eta = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
    d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    return d;
  }

 private:
  Eigen::MatrixXd C_, se_, sv_;
};

inline Eigen::VectorXd scalar_vec(double v) {
  return Eigen::VectorXd::Constant(1, v);
}
inline Eigen::MatrixXd scalar_mat(double v) {
  return Eigen::MatrixXd::Constant(1, 1, v);
}

}  // namespace kfbias::test
