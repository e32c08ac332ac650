#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace kfbias {

/// Thrown when a computation produces non-finite values, an iteration fails
/// to converge, or a matrix is numerically unusable (singular / badly
/// conditioned innovation covariance, asymmetric covariance, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model parameter vector theta in R^r, r >= 1.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) {
      throw std::invalid_argument("ParameterVector: r must be >= 1");
    }
    if (!values_.allFinite()) {
      throw std::invalid_argument("ParameterVector: entries must be finite");
    }
  }
  explicit ParameterVector(double scalar)
      : ParameterVector(Eigen::VectorXd::Constant(1, scalar)) {}

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index k) const { return values_(k); }

 private:
  Eigen::VectorXd values_;
};

/// Fixed parameter bias epsilon = theta - theta0.
class BiasSpec {
 public:
  BiasSpec() = default;
  explicit BiasSpec(Eigen::VectorXd epsilon) : epsilon_(std::move(epsilon)) {
    if (epsilon_.size() < 1) {
      throw std::invalid_argument("BiasSpec: length must be >= 1");
    }
    if (!epsilon_.allFinite()) {
      throw std::invalid_argument("BiasSpec: entries must be finite");
    }
  }
  explicit BiasSpec(double scalar)
      : BiasSpec(Eigen::VectorXd::Constant(1, scalar)) {}

  const Eigen::VectorXd& epsilon() const { return epsilon_; }
  Eigen::Index size() const { return epsilon_.size(); }
  double operator[](Eigen::Index k) const { return epsilon_(k); }
  bool is_zero() const { return epsilon_.isZero(0.0); }

 private:
  Eigen::VectorXd epsilon_;
};

/// One-step system matrices of the (linearized) state space model
///
///   x_t = u_t + A x_{t-1} + sigma_eta * eta_t
///   y_t = d_t + C x_t     + sigma_eps * eps_t
///
/// with eta_t, eps_t independent standard Gaussians.
struct SystemMatrices {
  Eigen::VectorXd u;          // n_x
  Eigen::MatrixXd A;          // n_x x n_x
  Eigen::VectorXd d;          // n_y
  Eigen::MatrixXd C;          // n_y x n_x
  Eigen::MatrixXd sigma_eta;  // n_x x n_x
  Eigen::MatrixXd sigma_eps;  // n_y x n_y

  Eigen::Index nx() const { return A.rows(); }
  Eigen::Index ny() const { return C.rows(); }

  Eigen::MatrixXd Q() const { return sigma_eta * sigma_eta.transpose(); }
  Eigen::MatrixXd R() const { return sigma_eps * sigma_eps.transpose(); }

  void validate() const {
    const auto n = nx();
    const auto m = ny();
    if (A.cols() != n || u.size() != n || sigma_eta.rows() != n ||
        sigma_eta.cols() != n || C.cols() != n || d.size() != m ||
        sigma_eps.rows() != m || sigma_eps.cols() != m) {
      throw std::invalid_argument("SystemMatrices: inconsistent dimensions");
    }
  }
};

/// Per-component derivatives of the system matrices with respect to theta.
/// Index k runs over the r parameter components.
struct DerivativeBundle {
  std::vector<Eigen::VectorXd> du;         // d u_t / d theta_k
  std::vector<Eigen::MatrixXd> dA;         // d A   / d theta_k
  std::vector<Eigen::VectorXd> dd;         // d d_t / d theta_k
  std::vector<Eigen::MatrixXd> dC;         // d C   / d theta_k
  std::vector<Eigen::MatrixXd> dsigma_eta; // d sigma_eta / d theta_k
  std::vector<Eigen::MatrixXd> dsigma_eps; // d sigma_eps / d theta_k

  std::size_t size() const { return dA.size(); }

  void validate(const SystemMatrices& sys) const {
    const std::size_t r = size();
    if (du.size() != r || dd.size() != r || dC.size() != r ||
        dsigma_eta.size() != r || dsigma_eps.size() != r) {
      throw std::invalid_argument("DerivativeBundle: ragged component arrays");
    }
    for (std::size_t k = 0; k < r; ++k) {
      if (du[k].size() != sys.u.size() || dA[k].rows() != sys.A.rows() ||
          dA[k].cols() != sys.A.cols() || dd[k].size() != sys.d.size() ||
          dC[k].rows() != sys.C.rows() || dC[k].cols() != sys.C.cols() ||
          dsigma_eta[k].rows() != sys.sigma_eta.rows() ||
          dsigma_eps[k].rows() != sys.sigma_eps.rows()) {
        throw std::invalid_argument(
            "DerivativeBundle: shape mismatch at component " + std::to_string(k));
      }
    }
  }
};

/// Contraction sum_k eps_k * dM[k] used by all first-order corrective terms.
/// Reduces to the plain scalar product eps * dM/dtheta when r = 1.
template <typename MatLike>
MatLike contract(const std::vector<MatLike>& dM, const BiasSpec& eps) {
  if (dM.empty()) {
    throw std::invalid_argument("contract: empty derivative array");
  }
  if (static_cast<Eigen::Index>(dM.size()) != eps.size()) {
    throw std::invalid_argument("contract: derivative/bias length mismatch");
  }
  MatLike acc = MatLike::Zero(dM[0].rows(), dM[0].cols());
  for (std::size_t k = 0; k < dM.size(); ++k) {
    acc += eps[static_cast<Eigen::Index>(k)] * dM[k];
  }
  return acc;
}

}  // namespace kfbias
