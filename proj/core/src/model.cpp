#include "kfbias/model.hpp"

#include <cmath>
#include <sstream>

namespace kfbias {

namespace {

void check_finite(const SystemMatrices& sys, const ParameterVector& theta,
                  const LinearizationPoint& at) {
  const bool ok = sys.u.allFinite() && sys.A.allFinite() && sys.d.allFinite() &&
                  sys.C.allFinite() && sys.sigma_eta.allFinite() &&
                  sys.sigma_eps.allFinite();
  if (!ok) {
    std::ostringstream msg;
    msg << "linearize_ekf: non-finite system matrices at theta = ["
        << theta.values().transpose() << "], xhat_prev = ["
        << at.xhat_prev.transpose() << "], xhat_pred = ["
        << at.xhat_pred.transpose() << "]";
    throw NumericError(msg.str());
  }
}

}  // namespace

DerivativeBundle StateSpaceModel::theta_derivatives(
    const ParameterVector& theta, const LinearizationPoint& at) const {
  return finite_diff_theta_derivatives(*this, theta, at);
}

SystemMatrices linearize_ekf(const StateSpaceModel& model,
                             const ParameterVector& theta,
                             const Eigen::VectorXd& xhat_prev,
                             const Eigen::VectorXd& xhat_pred) {
  if (xhat_prev.size() != model.state_dim() ||
      xhat_pred.size() != model.state_dim()) {
    throw std::invalid_argument("linearize_ekf: state dimension mismatch");
  }
  SystemMatrices sys;
  sys.A = model.b_jacobian(theta, xhat_prev);
  sys.u = model.b(theta, xhat_prev) - sys.A * xhat_prev;
  sys.C = model.h_jacobian(theta, xhat_pred);
  sys.d = model.h(theta, xhat_pred) - sys.C * xhat_pred;
  sys.sigma_eta = model.sigma_eta(theta);
  sys.sigma_eps = model.sigma_eps(theta);
  sys.validate();
  check_finite(sys, theta, {xhat_prev, xhat_pred});
  return sys;
}

namespace {

DerivativeBundle fd_with_steps(const StateSpaceModel& model,
                               const ParameterVector& theta,
                               const LinearizationPoint& at,
                               const Eigen::VectorXd& steps) {
  const Eigen::Index r = theta.size();
  DerivativeBundle out;
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::VectorXd plus = theta.values();
    Eigen::VectorXd minus = theta.values();
    plus(k) += steps(k);
    minus(k) -= steps(k);
    SystemMatrices hi, lo;
    try {
      hi = linearize_ekf(model, ParameterVector(plus), at.xhat_prev, at.xhat_pred);
      lo = linearize_ekf(model, ParameterVector(minus), at.xhat_prev, at.xhat_pred);
    } catch (const std::exception& e) {
      throw NumericError("finite_diff_theta_derivatives: evaluation failed for "
                         "component " + std::to_string(k) + ": " + e.what());
    }
    const double inv = 1.0 / (2.0 * steps(k));
    out.du.push_back((hi.u - lo.u) * inv);
    out.dA.push_back((hi.A - lo.A) * inv);
    out.dd.push_back((hi.d - lo.d) * inv);
    out.dC.push_back((hi.C - lo.C) * inv);
    out.dsigma_eta.push_back((hi.sigma_eta - lo.sigma_eta) * inv);
    out.dsigma_eps.push_back((hi.sigma_eps - lo.sigma_eps) * inv);
  }
  return out;
}

}  // namespace

DerivativeBundle finite_diff_theta_derivatives(const StateSpaceModel& model,
                                               const ParameterVector& theta,
                                               const LinearizationPoint& at,
                                               double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("finite_diff_theta_derivatives: step must be > 0");
  }
  return fd_with_steps(model, theta, at,
                       Eigen::VectorXd::Constant(theta.size(), step));
}

DerivativeBundle finite_diff_theta_derivatives(const StateSpaceModel& model,
                                               const ParameterVector& theta,
                                               const LinearizationPoint& at) {
  Eigen::VectorXd steps(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    steps(k) = 1e-6 * std::max(1.0, std::abs(theta[k]));
  }
  return fd_with_steps(model, theta, at, steps);
}

Ar1Model::Ar1Model(double q, double rr) {
  if (q < 0.0 || rr < 0.0) {
    throw std::invalid_argument("Ar1Model: noise variances must be >= 0");
  }
  sqrt_q_ = std::sqrt(q);
  sqrt_r_ = std::sqrt(rr);
}

Eigen::VectorXd Ar1Model::b(const ParameterVector& theta,
                            const Eigen::VectorXd& x) const {
  return theta[0] * x;
}

Eigen::VectorXd Ar1Model::h(const ParameterVector&,
                            const Eigen::VectorXd& x) const {
  return x;
}

Eigen::MatrixXd Ar1Model::b_jacobian(const ParameterVector& theta,
                                     const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Constant(1, 1, theta[0]);
}

Eigen::MatrixXd Ar1Model::h_jacobian(const ParameterVector&,
                                     const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Identity(1, 1);
}

Eigen::MatrixXd Ar1Model::sigma_eta(const ParameterVector&) const {
  return Eigen::MatrixXd::Constant(1, 1, sqrt_q_);
}

Eigen::MatrixXd Ar1Model::sigma_eps(const ParameterVector&) const {
  return Eigen::MatrixXd::Constant(1, 1, sqrt_r_);
}

DerivativeBundle Ar1Model::theta_derivatives(const ParameterVector&,
                                             const LinearizationPoint&) const {
  DerivativeBundle d;
  d.du = {Eigen::VectorXd::Zero(1)};
  d.dA = {Eigen::MatrixXd::Identity(1, 1)};
  d.dd = {Eigen::VectorXd::Zero(1)};
  d.dC = {Eigen::MatrixXd::Zero(1, 1)};
  d.dsigma_eta = {Eigen::MatrixXd::Zero(1, 1)};
  d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1)};
  return d;
}

TanhModel::TanhModel(double q, double rr) {
  if (q < 0.0 || rr < 0.0) {
    throw std::invalid_argument("TanhModel: noise variances must be >= 0");
  }
  sqrt_q_ = std::sqrt(q);
  sqrt_r_ = std::sqrt(rr);
}

Eigen::VectorXd TanhModel::b(const ParameterVector& theta,
                             const Eigen::VectorXd& x) const {
  return Eigen::VectorXd::Constant(1, theta[0] * std::tanh(x(0)));
}

Eigen::VectorXd TanhModel::h(const ParameterVector&,
                             const Eigen::VectorXd& x) const {
  return x;
}

Eigen::MatrixXd TanhModel::b_jacobian(const ParameterVector& theta,
                                      const Eigen::VectorXd& x) const {
  const double th = std::tanh(x(0));
  return Eigen::MatrixXd::Constant(1, 1, theta[0] * (1.0 - th * th));
}

Eigen::MatrixXd TanhModel::h_jacobian(const ParameterVector&,
                                      const Eigen::VectorXd&) const {
  return Eigen::MatrixXd::Identity(1, 1);
}

Eigen::MatrixXd TanhModel::sigma_eta(const ParameterVector&) const {
  return Eigen::MatrixXd::Constant(1, 1, sqrt_q_);
}

Eigen::MatrixXd TanhModel::sigma_eps(const ParameterVector&) const {
  return Eigen::MatrixXd::Constant(1, 1, sqrt_r_);
}

DerivativeBundle TanhModel::theta_derivatives(
    const ParameterVector&, const LinearizationPoint& at) const {
  // u_t(theta) = theta tanh(xp) - A xp with A = theta (1 - tanh^2(xp)),
  // so du/dtheta = tanh(xp) - (1 - tanh^2(xp)) xp and dA/dtheta = 1 - tanh^2.
  const double xp = at.xhat_prev(0);
  const double th = std::tanh(xp);
  const double sech2 = 1.0 - th * th;
  DerivativeBundle d;
  d.du = {Eigen::VectorXd::Constant(1, th - sech2 * xp)};
  d.dA = {Eigen::MatrixXd::Constant(1, 1, sech2)};
  d.dd = {Eigen::VectorXd::Zero(1)};
  d.dC = {Eigen::MatrixXd::Zero(1, 1)};
  d.dsigma_eta = {Eigen::MatrixXd::Zero(1, 1)};
  d.dsigma_eps = {Eigen::MatrixXd::Zero(1, 1)};
  return d;
}

std::unique_ptr<StateSpaceModel> make_ar1(double phi, double q, double rr) {
  if (!std::isfinite(phi)) {
    throw std::invalid_argument("make_ar1: phi must be finite");
  }
  return std::make_unique<Ar1Model>(q, rr);
}

std::unique_ptr<StateSpaceModel> make_tanh(double q, double rr) {
  return std::make_unique<TanhModel>(q, rr);
}

}  // namespace kfbias
