#include "kfbias/bias.hpp"

#include <sstream>

namespace kfbias {

namespace {

Eigen::MatrixXd assemble(const Eigen::MatrixXd& tl, const Eigen::MatrixXd& tr,
                         const Eigen::MatrixXd& bl, const Eigen::MatrixXd& br) {
  Eigen::MatrixXd full(tl.rows() + bl.rows(), tl.cols() + tr.cols());
  full.topLeftCorner(tl.rows(), tl.cols()) = tl;
  full.topRightCorner(tr.rows(), tr.cols()) = tr;
  full.bottomLeftCorner(bl.rows(), bl.cols()) = bl;
  full.bottomRightCorner(br.rows(), br.cols()) = br;
  return full;
}

void check_symmetric(const Eigen::MatrixXd& full, const char* what) {
  const double tol = 1e-9 * std::max(1e-30, std::abs(full.trace()));
  const double asym = (full - full.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    std::ostringstream msg;
    msg << what << ": assembled covariance asymmetric by " << asym
        << " (tolerance " << tol << ")";
    throw NumericError(msg.str());
  }
}

}  // namespace

Eigen::MatrixXd AugmentedCovariance::state_matrix() const {
  return assemble(V, S.transpose(), S, P);
}

Eigen::MatrixXd AugmentedCovariance::obs_matrix() const {
  return assemble(Vy, Sy.transpose(), Sy, Py);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> corrective_state_terms(
    const SystemMatrices& sys_theta, const DerivativeBundle& derivs,
    const Eigen::MatrixXd& K, const BiasSpec& eps) {
  derivs.validate(sys_theta);
  const Eigen::Index nx = sys_theta.nx();
  const Eigen::MatrixXd IKC =
      Eigen::MatrixXd::Identity(nx, nx) - K * sys_theta.C;
  Eigen::VectorXd E_x = Eigen::VectorXd::Zero(nx);
  Eigen::MatrixXd F_x = Eigen::MatrixXd::Zero(nx, nx);
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    E_x -= eps[k] * (IKC * derivs.du[k] - K * derivs.dd[k] -
                     K * derivs.dC[k] * sys_theta.u);
    F_x -= eps[k] * (IKC * derivs.dA[k] - K * derivs.dC[k] * sys_theta.A);
  }
  return {std::move(E_x), std::move(F_x)};
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> corrective_obs_terms(
    const DerivativeBundle& derivs, const BiasSpec& eps) {
  if (static_cast<Eigen::Index>(derivs.size()) != eps.size()) {
    throw std::invalid_argument("corrective_obs_terms: bias length mismatch");
  }
  Eigen::VectorXd E_y = -contract(derivs.dd, eps);
  Eigen::MatrixXd F_y = -contract(derivs.dC, eps);
  return {std::move(E_y), std::move(F_y)};
}

CorrectiveTerms corrective_terms(const SystemMatrices& sys_theta,
                                 const DerivativeBundle& derivs,
                                 const Eigen::MatrixXd& K, const BiasSpec& eps) {
  CorrectiveTerms t;
  std::tie(t.E_x, t.F_x) = corrective_state_terms(sys_theta, derivs, K, eps);
  std::tie(t.E_y, t.F_y) = corrective_obs_terms(derivs, eps);
  return t;
}

AugmentedMean expected_error_step(const AugmentedMean& prev,
                                  const SystemMatrices& sys_theta,
                                  const Eigen::MatrixXd& K,
                                  const CorrectiveTerms& terms,
                                  const Eigen::VectorXd& xhat_theta_t) {
  const Eigen::Index nx = sys_theta.nx();
  const Eigen::MatrixXd IKC =
      Eigen::MatrixXd::Identity(nx, nx) - K * sys_theta.C;
  AugmentedMean out;
  out.m = (IKC * sys_theta.A + terms.F_x) * prev.m + terms.E_x +
          terms.F_x * prev.xhat_theta;
  out.xhat_theta = xhat_theta_t;
  return out;
}

Eigen::VectorXd expected_residual(const AugmentedMean& mean,
                                  const SystemMatrices& sys_theta,
                                  const CorrectiveTerms& terms) {
  return (sys_theta.C + terms.F_y) * mean.m + terms.E_y +
         terms.F_y * mean.xhat_theta;
}

Eigen::MatrixXd augmented_transition(const SystemMatrices& sys_theta,
                                     const SystemMatrices& sys_theta0,
                                     const Eigen::MatrixXd& K,
                                     const CorrectiveTerms& terms) {
  const Eigen::Index nx = sys_theta.nx();
  if (sys_theta0.nx() != nx) {
    throw std::invalid_argument("augmented_transition: dimension mismatch");
  }
  const Eigen::MatrixXd IKC =
      Eigen::MatrixXd::Identity(nx, nx) - K * sys_theta.C;
  return assemble(IKC * sys_theta.A, terms.F_x,
                  Eigen::MatrixXd::Zero(nx, nx), sys_theta0.A);
}

NoiseMomentBlocks noise_moment_blocks(const SystemMatrices& sys_theta,
                                      const SystemMatrices& sys_theta0,
                                      const DerivativeBundle& derivs,
                                      const Eigen::MatrixXd& K,
                                      const BiasSpec& eps) {
  derivs.validate(sys_theta);
  const Eigen::Index nx = sys_theta.nx();
  const Eigen::MatrixXd IKC =
      Eigen::MatrixXd::Identity(nx, nx) - K * sys_theta.C;

  // W~x = G_eta * eta_t + G_eps * eps_t and W~y = H_eps * eps_t with
  //   G_eta = (I-KC) sigma_eta - sum_k eps_k [(I-KC) dsigma_eta_k - K dC_k sigma_eta]
  //   G_eps = -K sigma_eps + sum_k eps_k K dsigma_eps_k
  //   H_eps = sigma_eps - sum_k eps_k dsigma_eps_k.
  Eigen::MatrixXd G_eta = IKC * sys_theta.sigma_eta;
  Eigen::MatrixXd G_eps = -K * sys_theta.sigma_eps;
  Eigen::MatrixXd H_eps = sys_theta.sigma_eps;
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    G_eta -= eps[k] * (IKC * derivs.dsigma_eta[k] -
                       K * derivs.dC[k] * sys_theta.sigma_eta);
    G_eps += eps[k] * K * derivs.dsigma_eps[k];
    H_eps -= eps[k] * derivs.dsigma_eps[k];
  }

  NoiseMomentBlocks out;
  out.var_Wx = G_eta * G_eta.transpose() + G_eps * G_eps.transpose();
  out.cov_Wx_eta = G_eta * sys_theta0.sigma_eta.transpose();
  out.Q0 = sys_theta0.Q();
  out.var_Wy = H_eps * H_eps.transpose();
  out.cov_Wy_eps = H_eps * sys_theta0.sigma_eps.transpose();
  out.R0 = sys_theta0.R();
  out.cross_e_Wy = G_eps * H_eps.transpose();
  out.cross_e_eps0 = G_eps * sys_theta0.sigma_eps.transpose();
  return out;
}

AugmentedCovariance initial_augmented_covariance(const Eigen::MatrixXd& x0_cov) {
  AugmentedCovariance c;
  c.V = x0_cov;
  c.S = x0_cov;
  c.P = x0_cov;
  const Eigen::Index ny = 0;
  c.Vy = Eigen::MatrixXd::Zero(ny, ny);
  c.Sy = Eigen::MatrixXd::Zero(ny, ny);
  c.Py = Eigen::MatrixXd::Zero(ny, ny);
  return c;
}

AugmentedCovariance covariance_step(const AugmentedCovariance& prev,
                                    const Eigen::MatrixXd& M,
                                    const NoiseMomentBlocks& blocks) {
  const Eigen::Index nx = prev.V.rows();
  if (M.rows() != 2 * nx || M.cols() != 2 * nx) {
    throw std::invalid_argument("covariance_step: transition size mismatch");
  }
  const Eigen::MatrixXd prev_full = prev.state_matrix();
  check_symmetric(prev_full, "covariance_step");

  const Eigen::MatrixXd N =
      assemble(blocks.var_Wx, blocks.cov_Wx_eta,
               blocks.cov_Wx_eta.transpose(), blocks.Q0);
  Eigen::MatrixXd next = M * prev_full * M.transpose() + N;
  next = 0.5 * (next + next.transpose());

  AugmentedCovariance out;
  out.V = next.topLeftCorner(nx, nx);
  out.S = next.bottomLeftCorner(nx, nx);
  out.P = next.bottomRightCorner(nx, nx);
  out.Vy = prev.Vy;
  out.Sy = prev.Sy;
  out.Py = prev.Py;
  return out;
}

AugmentedCovariance obs_covariance_step(const AugmentedCovariance& state_cov,
                                        const SystemMatrices& sys_theta,
                                        const SystemMatrices& sys_theta0,
                                        const CorrectiveTerms& terms,
                                        const NoiseMomentBlocks& blocks) {
  const Eigen::Index nx = sys_theta.nx();
  const Eigen::Index ny = sys_theta.ny();
  const Eigen::MatrixXd G =
      assemble(sys_theta.C, terms.F_y, Eigen::MatrixXd::Zero(ny, nx),
               sys_theta0.C);
  const Eigen::MatrixXd Ny =
      assemble(blocks.var_Wy, blocks.cov_Wy_eps,
               blocks.cov_Wy_eps.transpose(), blocks.R0);
  // X = Cov(E_t, W_t^y): only the e-row is nonzero (x_t is independent of
  // the same-time observation noise).
  const Eigen::MatrixXd X =
      assemble(blocks.cross_e_Wy, blocks.cross_e_eps0,
               Eigen::MatrixXd::Zero(nx, ny), Eigen::MatrixXd::Zero(nx, ny));

  const Eigen::MatrixXd state_full = state_cov.state_matrix();
  check_symmetric(state_full, "obs_covariance_step");

  const Eigen::MatrixXd GX = G * X;
  Eigen::MatrixXd obs = G * state_full * G.transpose() + GX + GX.transpose() + Ny;
  obs = 0.5 * (obs + obs.transpose());

  AugmentedCovariance out = state_cov;
  out.Vy = obs.topLeftCorner(ny, ny);
  out.Sy = obs.bottomLeftCorner(ny, ny);
  out.Py = obs.bottomRightCorner(ny, ny);
  return out;
}

std::vector<double> ar1_expected_error_path(double phi, double eps,
                                            std::span<const double> gains,
                                            std::span<const double> xhat_prev_path,
                                            double m0) {
  if (gains.size() != xhat_prev_path.size()) {
    throw std::invalid_argument("ar1_expected_error_path: length mismatch");
  }
  std::vector<double> ms;
  ms.reserve(gains.size());
  double m = m0;
  for (std::size_t t = 0; t < gains.size(); ++t) {
    const double one_minus_k = 1.0 - gains[t];
    m = one_minus_k * (phi - eps) * m - eps * one_minus_k * xhat_prev_path[t];
    ms.push_back(m);
  }
  return ms;
}

std::vector<PropagationStep> propagate_bias(const StateSpaceModel& model,
                                            const ParameterVector& theta,
                                            const BiasSpec& eps,
                                            std::span<const FilterState> path,
                                            const FilterInit& init,
                                            const Eigen::MatrixXd& x0_cov) {
  if (theta.size() != eps.size()) {
    throw std::invalid_argument("propagate_bias: theta/eps length mismatch");
  }
  const ParameterVector theta0(theta.values() - eps.epsilon());

  std::vector<PropagationStep> steps;
  steps.reserve(path.size());

  AugmentedMean mean;
  mean.m = Eigen::VectorXd::Zero(model.state_dim());
  mean.xhat_theta = init.x0;
  AugmentedCovariance cov = initial_augmented_covariance(x0_cov);

  Eigen::VectorXd xhat_prev = init.x0;
  for (const FilterState& st : path) {
    const LinearizationPoint at{xhat_prev, st.xhat_pred};
    const SystemMatrices sys_theta =
        linearize_ekf(model, theta, at.xhat_prev, at.xhat_pred);
    const SystemMatrices sys_theta0 =
        linearize_ekf(model, theta0, at.xhat_prev, at.xhat_pred);
    const DerivativeBundle derivs =
        model.has_analytic_theta_derivatives()
            ? model.theta_derivatives(theta, at)
            : finite_diff_theta_derivatives(model, theta, at);

    PropagationStep step;
    step.t = st.t;
    step.terms = corrective_terms(sys_theta, derivs, st.gain, eps);
    mean = expected_error_step(mean, sys_theta, st.gain, step.terms, st.xhat);
    step.mean = mean;
    step.residual_mean = expected_residual(mean, sys_theta, step.terms);

    const Eigen::MatrixXd M =
        augmented_transition(sys_theta, sys_theta0, st.gain, step.terms);
    const NoiseMomentBlocks blocks =
        noise_moment_blocks(sys_theta, sys_theta0, derivs, st.gain, eps);
    cov = covariance_step(cov, M, blocks);
    cov = obs_covariance_step(cov, sys_theta, sys_theta0, step.terms, blocks);
    step.cov = cov;

    steps.push_back(std::move(step));
    xhat_prev = st.xhat;
  }
  return steps;
}

}  // namespace kfbias
