#pragma once

#include <span>
#include <vector>

#include "kfbias/kalman.hpp"
#include "kfbias/model.hpp"
#include "kfbias/types.hpp"

namespace kfbias {

/// First-order corrective terms arising from the parameter bias.
/// E_x, F_x enter the state error recursion; E_y, F_y the residual equation.
/// All four are identically zero when eps = 0.
struct CorrectiveTerms {
  Eigen::VectorXd E_x;  // n_x
  Eigen::MatrixXd F_x;  // n_x x n_x
  Eigen::VectorXd E_y;  // n_y
  Eigen::MatrixXd F_y;  // n_y x n_x
};

/// Exact second moments of the augmented-system noises
///   W~x = (I - K C_th) sigma_eta_th eta - K sigma_eps_th eps + Wx^eps
///   W~y = sigma_eps_th eps + Wy^eps
/// as linear combinations of the independent standard Gaussians (eta, eps),
/// including all O(eps) cross terms. cross_e_Wy and cross_e_eps0 carry the
/// covariance between the error-side noise and the observation-side noises
/// (both driven by the same eps_t), needed for the Sigma_t^y recursion.
struct NoiseMomentBlocks {
  Eigen::MatrixXd var_Wx;       // V[W~x]                     n_x x n_x
  Eigen::MatrixXd cov_Wx_eta;   // E[W~x (sigma_eta0 eta)']   n_x x n_x
  Eigen::MatrixXd Q0;           // sigma_eta0 sigma_eta0'
  Eigen::MatrixXd var_Wy;       // V[W~y]                     n_y x n_y
  Eigen::MatrixXd cov_Wy_eps;   // E[W~y (sigma_eps0 eps)']   n_y x n_y
  Eigen::MatrixXd R0;           // sigma_eps0 sigma_eps0'
  Eigen::MatrixXd cross_e_Wy;   // E[(eps-part of W~x) W~y']  n_x x n_y
  Eigen::MatrixXd cross_e_eps0; // E[(eps-part of W~x) (sigma_eps0 eps)']
};

/// m_t = E_{theta0}[e_t | y_1:t] together with the biased filter's posterior
/// mean it is anchored to.
struct AugmentedMean {
  Eigen::VectorXd m;           // n_x
  Eigen::VectorXd xhat_theta;  // E_theta[x_t | y_1:t]
};

/// Joint second moments of the augmented pairs (e_t, x_t) and (xi_t, y_t):
///   Sigma_t^x = [[V, S'], [S, P]],  Sigma_t^y = [[Vy, Sy'], [Sy, Py]]
/// with S = Cov(x_t, e_t) and Sy = Cov(y_t, xi_t).
struct AugmentedCovariance {
  Eigen::MatrixXd V;   // V[e_t]
  Eigen::MatrixXd S;   // Cov(x_t, e_t)
  Eigen::MatrixXd P;   // V[x_t]
  Eigen::MatrixXd Vy;  // V[xi_t]
  Eigen::MatrixXd Sy;  // Cov(y_t, xi_t)
  Eigen::MatrixXd Py;  // V[y_t]

  Eigen::MatrixXd state_matrix() const;  // 2n_x x 2n_x, block order (e, x)
  Eigen::MatrixXd obs_matrix() const;    // 2n_y x 2n_y, block order (xi, y)
};

/// E_x = -sum_k eps_k [(I-KC) du_k - K dd_k - K dC_k u]
/// F_x = -sum_k eps_k [(I-KC) dA_k - K dC_k A]
std::pair<Eigen::VectorXd, Eigen::MatrixXd> corrective_state_terms(
    const SystemMatrices& sys_theta, const DerivativeBundle& derivs,
    const Eigen::MatrixXd& K, const BiasSpec& eps);

/// E_y = -sum_k eps_k dd_k,  F_y = -sum_k eps_k dC_k
std::pair<Eigen::VectorXd, Eigen::MatrixXd> corrective_obs_terms(
    const DerivativeBundle& derivs, const BiasSpec& eps);

/// Both pairs in one struct.
CorrectiveTerms corrective_terms(const SystemMatrices& sys_theta,
                                 const DerivativeBundle& derivs,
                                 const Eigen::MatrixXd& K, const BiasSpec& eps);

/// One step of the recursive expected a-posteriori error:
///   m_t = [(I-KC)A + F_x] m_{t-1} + E_x + F_x xhat_theta_{t-1}.
/// xhat_theta_t comes from the attached (biased) filter path.
AugmentedMean expected_error_step(const AugmentedMean& prev,
                                  const SystemMatrices& sys_theta,
                                  const Eigen::MatrixXd& K,
                                  const CorrectiveTerms& terms,
                                  const Eigen::VectorXd& xhat_theta_t);

/// E_{theta0}[xi_t | y_1:t] = (C + F_y) m_t + E_y + F_y xhat_theta_t.
Eigen::VectorXd expected_residual(const AugmentedMean& mean,
                                  const SystemMatrices& sys_theta,
                                  const CorrectiveTerms& terms);

/// M_t = [[(I-K C_th) A_th, F_x], [0, A_th0]], block order (e, x).
Eigen::MatrixXd augmented_transition(const SystemMatrices& sys_theta,
                                     const SystemMatrices& sys_theta0,
                                     const Eigen::MatrixXd& K,
                                     const CorrectiveTerms& terms);

NoiseMomentBlocks noise_moment_blocks(const SystemMatrices& sys_theta,
                                      const SystemMatrices& sys_theta0,
                                      const DerivativeBundle& derivs,
                                      const Eigen::MatrixXd& K,
                                      const BiasSpec& eps);

/// Exact initial augmented covariance for x_0 ~ (mean, x0_cov) filtered from
/// xhat_0 = mean: every block equals Var(x_0).
AugmentedCovariance initial_augmented_covariance(const Eigen::MatrixXd& x0_cov);

/// Full-matrix Lyapunov step Sigma_t^x = M Sigma_{t-1}^x M' + N with
/// N = [[var_Wx, cov_Wx_eta], [cov_Wx_eta', Q0]]. The P block reduces to
/// P_t = A0 P_{t-1} A0' + Q0 exactly. Throws NumericError if the previous
/// assembled matrix is asymmetric beyond 1e-9 * trace.
AugmentedCovariance covariance_step(const AugmentedCovariance& prev,
                                    const Eigen::MatrixXd& M,
                                    const NoiseMomentBlocks& blocks);

/// Observation-side moments for the same time index:
///   Sigma_t^y = G Sigma_t^x G' + G X + (G X)' + N_y
/// with G = [[C_th, F_y], [0, C_th0]], N_y = [[var_Wy, cov_Wy_eps],
/// [cov_Wy_eps', R0]] and X = Cov(E_t, W_t^y) = [[cross_e_Wy, cross_e_eps0],
/// [0, 0]] the error/observation-noise cross covariance (e_t carries a
/// -K sigma_eps eps_t component correlated with the same-time xi_t noise).
AugmentedCovariance obs_covariance_step(const AugmentedCovariance& state_cov,
                                        const SystemMatrices& sys_theta,
                                        const SystemMatrices& sys_theta0,
                                        const CorrectiveTerms& terms,
                                        const NoiseMomentBlocks& blocks);

/// Scalar AR(1) specialization m_t = (1-K_t)(phi-eps) m_{t-1}
/// - eps (1-K_t) xhat_prev_path[t]; xhat_prev_path[t] is the biased filter's
/// posterior mean at t-1 (so the first entry is xhat_0).
std::vector<double> ar1_expected_error_path(double phi, double eps,
                                            std::span<const double> gains,
                                            std::span<const double> xhat_prev_path,
                                            double m0);

/// Everything the propagation produces at one time step.
struct PropagationStep {
  int t = 0;
  CorrectiveTerms terms;
  AugmentedMean mean;
  Eigen::VectorXd residual_mean;  // E_{theta0}[xi_t | y_1:t]
  AugmentedCovariance cov;
};

/// Walks a biased-filter path and applies the full first-order propagation:
/// corrective terms, expected error/residual, and both covariance
/// recursions. theta0 = theta - eps; for nonlinear models the theta0-side
/// matrices are linearized at the same points as the filter's.
std::vector<PropagationStep> propagate_bias(const StateSpaceModel& model,
                                            const ParameterVector& theta,
                                            const BiasSpec& eps,
                                            std::span<const FilterState> path,
                                            const FilterInit& init,
                                            const Eigen::MatrixXd& x0_cov);

}  // namespace kfbias
