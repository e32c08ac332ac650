#include "kfbias/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "kfbias/rng.hpp"

namespace kfbias {

std::vector<Eigen::VectorXd> two_filter_exact_error(
    std::span<const Eigen::VectorXd> observations, const StateSpaceModel& model,
    const ParameterVector& theta0, const ParameterVector& theta,
    const FilterInit& init) {
  const auto path0 = run_filter(model, theta0, observations, init);
  const auto path = run_filter(model, theta, observations, init);
  std::vector<Eigen::VectorXd> diff;
  diff.reserve(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    diff.push_back(path0[t].xhat - path[t].xhat);
  }
  return diff;
}

ErrorComparison compare_error_paths(const StateSpaceModel& model,
                                    const ParameterVector& theta0,
                                    const ParameterVector& theta,
                                    std::span<const Eigen::VectorXd> observations,
                                    const FilterInit& init,
                                    const Eigen::MatrixXd& x0_cov) {
  ErrorComparison cmp;
  cmp.ekf_reference = !model.is_linear_in_x();
  cmp.exact = two_filter_exact_error(observations, model, theta0, theta, init);

  const BiasSpec eps(theta.values() - theta0.values());
  const auto path = run_filter(model, theta, observations, init);
  const auto steps = propagate_bias(model, theta, eps, path, init, x0_cov);

  cmp.approx.reserve(steps.size());
  cmp.abs_gap.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    cmp.approx.push_back(steps[t].mean.m);
    Eigen::VectorXd gap = (cmp.exact[t] - steps[t].mean.m).cwiseAbs();
    cmp.max_gap = std::max(cmp.max_gap, gap.maxCoeff());
    cmp.abs_gap.push_back(std::move(gap));
  }
  return cmp;
}

// Leave-one-out estimates follow from the totals:
//   C_(i) = (S_ab - a_i b_i N/(N-1)) / (N-2).
double jackknife_cov_se(const Eigen::VectorXd& a_centered,
                        const Eigen::VectorXd& b_centered) {
  const Eigen::Index n = a_centered.size();
  if (n < 3) {
    // leave-one-out covariance needs two remaining samples; report an
    // uninformative (infinite) standard error instead
    return std::numeric_limits<double>::infinity();
  }
  const double nn = static_cast<double>(n);
  const double s_ab = a_centered.dot(b_centered);
  const Eigen::ArrayXd loo =
      (s_ab - (a_centered.array() * b_centered.array()) * nn / (nn - 1.0)) /
      (nn - 2.0);
  const double loo_mean = loo.mean();
  const double ss = (loo - loo_mean).square().sum();
  return std::sqrt((nn - 1.0) / nn * ss);
}

namespace {

MomentEstimate covariance_block(const Eigen::MatrixXd& rows_centered,
                                const Eigen::MatrixXd& cols_centered) {
  const Eigen::Index nr = rows_centered.cols();
  const Eigen::Index nc = cols_centered.cols();
  const double n = static_cast<double>(rows_centered.rows());
  MomentEstimate est;
  est.value.resize(nr, nc);
  est.se.resize(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nc; ++j) {
      est.value(i, j) =
          rows_centered.col(i).dot(cols_centered.col(j)) / (n - 1.0);
      est.se(i, j) = jackknife_cov_se(rows_centered.col(i), cols_centered.col(j));
    }
  }
  return est;
}

}  // namespace

McReport monte_carlo_moments(const StateSpaceModel& model,
                             const ParameterVector& theta0,
                             const ParameterVector& theta, int T, int N,
                             std::uint64_t master_seed,
                             std::span<const int> check_times,
                             const Eigen::VectorXd& x0_mean,
                             const Eigen::MatrixXd& x0_cov,
                             const FilterInit& init) {
  if (N < 2) {
    throw std::invalid_argument("monte_carlo_moments: N must be >= 2");
  }
  for (int t : check_times) {
    if (t < 1 || t > T) {
      throw std::invalid_argument("monte_carlo_moments: check time out of range");
    }
  }
  const Eigen::Index nx = model.state_dim();
  const Eigen::Index ny = model.obs_dim();
  const Eigen::Index cols = 2 * nx + 2 * ny;  // [e | x | xi | y]

  std::vector<Eigen::MatrixXd> samples(check_times.size());
  for (auto& s : samples) {
    s.resize(N, cols);
  }

  const auto run_range = [&](int lo, int hi) {
    for (int rep = lo; rep < hi; ++rep) {
      const Trajectory traj = simulate(model, theta0, T, x0_mean, x0_cov,
                                       split_seed(master_seed, rep));
      const auto path = run_filter(model, theta, traj.observations, init);
      for (std::size_t ci = 0; ci < check_times.size(); ++ci) {
        const int t = check_times[ci];
        const FilterState& st = path[t - 1];
        const Eigen::VectorXd& x = traj.states[t];
        const Eigen::VectorXd& y = traj.observations[t - 1];
        const Eigen::MatrixXd C = model.h_jacobian(theta, st.xhat_pred);
        const Eigen::VectorXd yhat =
            model.h(theta, st.xhat_pred) + C * (st.xhat - st.xhat_pred);
        samples[ci].row(rep).segment(0, nx) = (x - st.xhat).transpose();
        samples[ci].row(rep).segment(nx, nx) = x.transpose();
        samples[ci].row(rep).segment(2 * nx, ny) = (y - yhat).transpose();
        samples[ci].row(rep).segment(2 * nx + ny, ny) = y.transpose();
      }
    }
  };

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::clamp(std::min(hw, N / 1024), 1, 16);
  if (workers <= 1) {
    run_range(0, N);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (N + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(N, lo + chunk);
      if (lo < hi) {
        pool.emplace_back(run_range, lo, hi);
      }
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  McReport report;
  report.replications = N;
  for (std::size_t ci = 0; ci < check_times.size(); ++ci) {
    Eigen::MatrixXd& s = samples[ci];
    const Eigen::RowVectorXd mean = s.colwise().mean();
    s.rowwise() -= mean;

    McMoments mm;
    mm.t = check_times[ci];
    mm.mean_e = mean.segment(0, nx).transpose();
    mm.mean_e_se.resize(nx);
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double sd = std::sqrt(s.col(i).squaredNorm() / (N - 1.0));
      mm.mean_e_se(i) = sd / std::sqrt(static_cast<double>(N));
    }
    const auto e = s.middleCols(0, nx);
    const auto x = s.middleCols(nx, nx);
    const auto xi = s.middleCols(2 * nx, ny);
    const auto y = s.middleCols(2 * nx + ny, ny);
    mm.V = covariance_block(e, e);
    mm.S = covariance_block(x, e);
    mm.P = covariance_block(x, x);
    mm.Vy = covariance_block(xi, xi);
    mm.Sy = covariance_block(y, xi);
    mm.Py = covariance_block(y, y);
    report.at_times.push_back(std::move(mm));
  }
  return report;
}

namespace {

void append_rows(std::vector<ValidationRow>& rows, const char* block, int t,
                 const Eigen::MatrixXd& theory, const MomentEstimate& mc) {
  for (Eigen::Index i = 0; i < theory.rows(); ++i) {
    for (Eigen::Index j = 0; j < theory.cols(); ++j) {
      ValidationRow row;
      row.entry = std::string(block) + "(" + std::to_string(i) + "," +
                  std::to_string(j) + ")@t" + std::to_string(t);
      row.t = t;
      row.theory = theory(i, j);
      row.empirical = mc.value(i, j);
      row.se = mc.se(i, j);
      row.z = (row.se > 0.0) ? (row.empirical - row.theory) / row.se
                             : std::numeric_limits<double>::infinity();
      rows.push_back(std::move(row));
    }
  }
}

}  // namespace

std::vector<ValidationRow> compare_covariances(
    const McReport& mc, std::span<const PropagationStep> theory) {
  std::vector<ValidationRow> rows;
  for (const McMoments& mm : mc.at_times) {
    const auto it = std::find_if(theory.begin(), theory.end(),
                                 [&](const PropagationStep& s) { return s.t == mm.t; });
    if (it == theory.end()) {
      throw std::invalid_argument("compare_covariances: no theory step for t=" +
                                  std::to_string(mm.t));
    }
    const AugmentedCovariance& cov = it->cov;
    append_rows(rows, "V", mm.t, cov.V, mm.V);
    append_rows(rows, "S", mm.t, cov.S, mm.S);
    append_rows(rows, "P", mm.t, cov.P, mm.P);
    append_rows(rows, "Vy", mm.t, cov.Vy, mm.Vy);
    append_rows(rows, "Sy", mm.t, cov.Sy, mm.Sy);
    append_rows(rows, "Py", mm.t, cov.Py, mm.Py);
  }
  return rows;
}

OrderFit order_of_accuracy(const StateSpaceModel& model,
                           const ParameterVector& theta0,
                           const Eigen::VectorXd& eps_direction,
                           std::span<const double> scales, int T,
                           std::uint64_t seed) {
  if (scales.size() < 3) {
    throw std::invalid_argument("order_of_accuracy: need at least 3 scales");
  }
  for (double s : scales) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("order_of_accuracy: scales must be positive");
    }
  }
  if (eps_direction.size() != theta0.size()) {
    throw std::invalid_argument("order_of_accuracy: direction dimension mismatch");
  }

  const FilterInit init = default_init(model, theta0);
  const Trajectory traj =
      simulate(model, theta0, T, init.x0, init.P0, seed);

  OrderFit fit;
  fit.scales.assign(scales.begin(), scales.end());
  for (double s : scales) {
    const ParameterVector theta(theta0.values() + s * eps_direction);
    const ErrorComparison cmp = compare_error_paths(
        model, theta0, theta, traj.observations, init, init.P0);
    fit.residuals.push_back(cmp.max_gap);
  }

  fit.exact_to_machine =
      std::all_of(fit.residuals.begin(), fit.residuals.end(),
                  [](double r) { return r < 1e-14; });
  if (fit.exact_to_machine) {
    return fit;
  }

  // log-log least squares over the non-degenerate points
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < fit.scales.size(); ++i) {
    if (fit.residuals[i] > 1e-15) {
      lx.push_back(std::log(fit.scales[i]));
      ly.push_back(std::log(fit.residuals[i]));
    }
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument(
        "order_of_accuracy: degenerate regression input (scales must not all "
        "be equal)");
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace kfbias
