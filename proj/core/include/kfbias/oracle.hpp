#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kfbias/bias.hpp"
#include "kfbias/kalman.hpp"
#include "kfbias/simulate.hpp"

namespace kfbias {

/// E_{theta0}[e_t | y_1:t] computed exactly as the difference of the two
/// filter posterior means on the same data (exact for models linear in x;
/// for nonlinear models this is the EKF-approximate reference).
std::vector<Eigen::VectorXd> two_filter_exact_error(
    std::span<const Eigen::VectorXd> observations, const StateSpaceModel& model,
    const ParameterVector& theta0, const ParameterVector& theta,
    const FilterInit& init);

/// Per-time comparison of the exact (two-filter) error against the
/// first-order recursion m_t on one simulated trajectory.
struct ErrorComparison {
  std::vector<Eigen::VectorXd> exact;    // x_hat(theta0) - x_hat(theta)
  std::vector<Eigen::VectorXd> approx;   // m_t
  std::vector<Eigen::VectorXd> abs_gap;  // |exact - approx| entrywise
  double max_gap = 0.0;
  bool ekf_reference = false;  // reference itself is EKF-approximate
};

ErrorComparison compare_error_paths(const StateSpaceModel& model,
                                    const ParameterVector& theta0,
                                    const ParameterVector& theta,
                                    std::span<const Eigen::VectorXd> observations,
                                    const FilterInit& init,
                                    const Eigen::MatrixXd& x0_cov);

/// Jackknife standard error of the sample covariance (1/(N-1) normalized)
/// between two centered sample vectors; leave-one-out estimates are formed
/// in O(N) from the totals.
double jackknife_cov_se(const Eigen::VectorXd& a_centered,
                        const Eigen::VectorXd& b_centered);

/// Empirical moment estimate with per-entry jackknife standard errors.
struct MomentEstimate {
  Eigen::MatrixXd value;
  Eigen::MatrixXd se;
};

/// Monte Carlo moments of (e_t, x_t) and (xi_t, y_t) at one checked time.
struct McMoments {
  int t = 0;
  Eigen::VectorXd mean_e;
  Eigen::VectorXd mean_e_se;
  MomentEstimate V, S, P, Vy, Sy, Py;
};

struct McReport {
  int replications = 0;
  std::vector<McMoments> at_times;
};

/// Simulates under theta0 and filters under theta, N times with seeds
/// split_seed(master_seed, rep). Estimates are independent of execution
/// order; replications run on several threads.
McReport monte_carlo_moments(const StateSpaceModel& model,
                             const ParameterVector& theta0,
                             const ParameterVector& theta, int T, int N,
                             std::uint64_t master_seed,
                             std::span<const int> check_times,
                             const Eigen::VectorXd& x0_mean,
                             const Eigen::MatrixXd& x0_cov,
                             const FilterInit& init);

/// One row of a theory-vs-Monte-Carlo covariance comparison.
struct ValidationRow {
  std::string entry;  // e.g. "V(0,0)@t20"
  int t = 0;
  double theory = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double z = 0.0;
};

/// Compares every entry of every block of the propagated covariances against
/// the Monte Carlo estimates at the report's checked times.
std::vector<ValidationRow> compare_covariances(
    const McReport& mc, std::span<const PropagationStep> theory);

/// Residual decay fit for the first-order expansion.
struct OrderFit {
  std::vector<double> scales;
  std::vector<double> residuals;  // r(s) = max_t |m_t - exact_t|
  double slope = 0.0;
  double intercept = 0.0;
  bool exact_to_machine = false;  // all residuals below 1e-14
};

/// For each scale s, sets theta = theta0 + s * direction and measures the
/// max-over-t gap between the recursion and the two-filter reference on one
/// fixed trajectory (simulated under theta0 with the given seed).
OrderFit order_of_accuracy(const StateSpaceModel& model,
                           const ParameterVector& theta0,
                           const Eigen::VectorXd& eps_direction,
                           std::span<const double> scales, int T,
                           std::uint64_t seed);

}  // namespace kfbias
