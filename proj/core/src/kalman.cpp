#include "kfbias/kalman.hpp"

#include <cmath>
#include <sstream>

namespace kfbias {

std::pair<Eigen::VectorXd, Eigen::MatrixXd> predict(
    const Eigen::VectorXd& xhat_prev, const Eigen::MatrixXd& P_prev,
    const SystemMatrices& sys) {
  if (xhat_prev.size() != sys.nx() || P_prev.rows() != sys.nx() ||
      P_prev.cols() != sys.nx()) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  Eigen::VectorXd xp = sys.u + sys.A * xhat_prev;
  Eigen::MatrixXd Pp = sys.A * P_prev * sys.A.transpose() + sys.Q();
  return {std::move(xp), std::move(Pp)};
}

FilterState update(const Eigen::VectorXd& xhat_pred,
                   const Eigen::MatrixXd& P_pred, const SystemMatrices& sys,
                   const Eigen::VectorXd& y) {
  if (y.size() != sys.ny() || xhat_pred.size() != sys.nx()) {
    throw std::invalid_argument("update: dimension mismatch");
  }
  const Eigen::MatrixXd S =
      sys.C * P_pred * sys.C.transpose() + sys.R();

  // n_y is small; an eigendecomposition gives both the solve and a condition
  // estimate.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    std::ostringstream msg;
    msg << "update: innovation covariance singular or ill-conditioned "
        << "(min eigenvalue " << lmin << ", condition estimate "
        << (lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity())
        << ")";
    throw NumericError(msg.str());
  }
  const Eigen::MatrixXd S_inv =
      es.eigenvectors() *
      es.eigenvalues().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();

  FilterState st;
  st.xhat_pred = xhat_pred;
  st.P_pred = P_pred;
  st.gain = P_pred * sys.C.transpose() * S_inv;
  st.innovation = y - sys.d - sys.C * xhat_pred;
  st.xhat = xhat_pred + st.gain * st.innovation;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.nx(), sys.nx());
  Eigen::MatrixXd P = (I - st.gain * sys.C) * P_pred;
  st.P = 0.5 * (P + P.transpose());
  return st;
}

std::vector<FilterState> run_filter(const StateSpaceModel& model,
                                    const ParameterVector& theta,
                                    std::span<const Eigen::VectorXd> observations,
                                    const FilterInit& init) {
  if (observations.empty()) {
    throw std::invalid_argument("run_filter: observations must be non-empty");
  }
  std::vector<FilterState> path;
  path.reserve(observations.size());
  Eigen::VectorXd xhat = init.x0;
  Eigen::MatrixXd P = init.P0;
  int t = 0;
  for (const Eigen::VectorXd& y : observations) {
    // A and u_t at xhat_{t-1}; the prediction xhat_t^- = u + A xhat_{t-1}
    // equals b(theta, xhat_{t-1}) by construction, then C and d_t at xhat_t^-.
    const Eigen::MatrixXd A = model.b_jacobian(theta, xhat);
    const Eigen::VectorXd u = model.b(theta, xhat) - A * xhat;
    SystemMatrices sys;
    sys.A = A;
    sys.u = u;
    sys.sigma_eta = model.sigma_eta(theta);
    sys.sigma_eps = model.sigma_eps(theta);
    Eigen::VectorXd xp = u + A * xhat;
    Eigen::MatrixXd Pp = A * P * A.transpose() + sys.Q();
    sys.C = model.h_jacobian(theta, xp);
    sys.d = model.h(theta, xp) - sys.C * xp;
    FilterState st = update(xp, Pp, sys, y);
    st.t = ++t;
    xhat = st.xhat;
    P = st.P;
    path.push_back(std::move(st));
  }
  return path;
}

FilterInit default_init(const StateSpaceModel& model,
                        const ParameterVector& theta) {
  FilterInit init;
  init.x0 = Eigen::VectorXd::Zero(model.state_dim());
  const Eigen::MatrixXd A = model.b_jacobian(theta, init.x0);
  const Eigen::MatrixXd Q =
      model.sigma_eta(theta) * model.sigma_eta(theta).transpose();
  init.P0 = stationary_state_covariance(A, Q);
  return init;
}

RiccatiResult steady_state_riccati(const SystemMatrices& sys, double tol,
                                   int max_iter) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("steady_state_riccati: tol must be > 0");
  }
  const Eigen::MatrixXd Q = sys.Q();
  const Eigen::MatrixXd R = sys.R();
  Eigen::MatrixXd Pp = Q;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd S = sys.C * Pp * sys.C.transpose() + R;
    const Eigen::MatrixXd K =
        S.ldlt().solve(sys.C * Pp).transpose();  // Pp C' S^{-1}
    const Eigen::MatrixXd P =
        Pp - K * sys.C * Pp;  // posterior
    Eigen::MatrixXd Pp_next = sys.A * P * sys.A.transpose() + Q;
    Pp_next = 0.5 * (Pp_next + Pp_next.transpose());
    residual = (Pp_next - Pp).cwiseAbs().maxCoeff();
    Pp = Pp_next;
    if (residual < tol) {
      const Eigen::MatrixXd Sf = sys.C * Pp * sys.C.transpose() + R;
      RiccatiResult out;
      out.P_pred = Pp;
      out.gain = Sf.ldlt().solve(sys.C * Pp).transpose();
      out.iterations = it;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "steady_state_riccati: no convergence after " << max_iter
      << " iterations (last residual " << residual << ")";
  throw NumericError(msg.str());
}

Eigen::MatrixXd stationary_state_covariance(const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw std::invalid_argument("stationary_state_covariance: dimension mismatch");
  }
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho < 1.0)) {
    throw std::invalid_argument(
        "stationary_state_covariance: state transition is not stable "
        "(spectral radius " + std::to_string(rho) + ")");
  }
  // vec(P) solves (I - A (x) A) vec(P) = vec(Q).
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
          M(i + j * n, k + l * n) -= A(i, k) * A(j, l);
        }
      }
    }
  }
  Eigen::VectorXd q(n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    q.segment(j * n, n) = Q.col(j);
  }
  const Eigen::VectorXd p = M.partialPivLu().solve(q);
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    P.col(j) = p.segment(j * n, n);
  }
  return 0.5 * (P + P.transpose());
}

}  // namespace kfbias
