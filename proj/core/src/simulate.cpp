#include "kfbias/simulate.hpp"

#include "kfbias/rng.hpp"

namespace kfbias {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) {
    throw std::invalid_argument("psd_sqrt: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + S.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("psd_sqrt: matrix is not PSD");
  }
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Trajectory simulate(const StateSpaceModel& model, const ParameterVector& theta0,
                    int T, const Eigen::VectorXd& x0_mean,
                    const Eigen::MatrixXd& x0_cov, std::uint64_t seed) {
  if (T < 1) {
    throw std::invalid_argument("simulate: T must be >= 1");
  }
  const Eigen::Index nx = model.state_dim();
  const Eigen::Index ny = model.obs_dim();
  if (x0_mean.size() != nx || x0_cov.rows() != nx || x0_cov.cols() != nx) {
    throw std::invalid_argument("simulate: x0 distribution dimension mismatch");
  }
  const Eigen::MatrixXd x0_scale = psd_sqrt(x0_cov);
  const Eigen::MatrixXd se = model.sigma_eta(theta0);
  const Eigen::MatrixXd sv = model.sigma_eps(theta0);

  GaussianStream g(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.theta0 = theta0;
  traj.states.reserve(T + 1);
  traj.observations.reserve(T);

  Eigen::VectorXd x = x0_mean + x0_scale * g.next_vector(nx);
  traj.states.push_back(x);
  for (int t = 1; t <= T; ++t) {
    x = model.b(theta0, x) + se * g.next_vector(nx);
    traj.states.push_back(x);
    traj.observations.push_back(model.h(theta0, x) + sv * g.next_vector(ny));
  }
  return traj;
}

}  // namespace kfbias
