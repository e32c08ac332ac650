#include <doctest.h>

#include <algorithm>
#include <set>

#include <kfbias/oracle.hpp>
#include <kfbias/rng.hpp>
#include <kfbias/simulate.hpp>

#include "test_support.hpp"

using namespace kfbias;
using namespace kfbias::test;

TEST_CASE("noiseless simulation is the deterministic recursion") {
  auto model = make_ar1(kPhi0, 0.0, 0.0);
  const Trajectory traj = simulate(*model, ParameterVector(kPhi0), 20,
                                   scalar_vec(1.0), scalar_mat(0.0), 5);
  double x = 1.0;
  for (int t = 1; t <= 20; ++t) {
    x *= kPhi0;
    CHECK(traj.states[t](0) == doctest::Approx(x).epsilon(1e-15));
    CHECK(traj.observations[t - 1](0) == traj.states[t](0));
  }
}

TEST_CASE("simulation is bitwise reproducible from the seed") {
  auto model = make_ar1(kPhi0, kQ, kR);
  const ParameterVector theta0(kPhi0);
  const auto a = simulate(*model, theta0, 200, scalar_vec(0.0),
                          scalar_mat(kStationaryVar), 12345);
  const auto b = simulate(*model, theta0, 200, scalar_vec(0.0),
                          scalar_mat(kStationaryVar), 12345);
  for (int t = 0; t <= 200; ++t) {
    CHECK(a.states[t](0) == b.states[t](0));
  }
  for (int t = 0; t < 200; ++t) {
    CHECK(a.observations[t](0) == b.observations[t](0));
  }
}

TEST_CASE("long-run state variance matches the stationary closed form") {
  auto model = make_ar1(kPhi0, kQ, kR);
  const int T = 100000;
  const Trajectory traj = simulate(*model, ParameterVector(kPhi0), T,
                                   scalar_vec(0.0), scalar_mat(kStationaryVar), 2);
  double s1 = 0, s2 = 0;
  for (int t = 1; t <= T; ++t) {
    s1 += traj.states[t](0);
    s2 += traj.states[t](0) * traj.states[t](0);
  }
  const double var = s2 / T - (s1 / T) * (s1 / T);
  CHECK(std::abs(var - kStationaryVar) < 0.01 * kStationaryVar);
}

TEST_CASE("simulate validates its inputs") {
  auto model = make_ar1(kPhi0, kQ, kR);
  CHECK_THROWS_AS(simulate(*model, ParameterVector(kPhi0), 0, scalar_vec(0.0),
                           scalar_mat(1.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate(*model, ParameterVector(kPhi0), 5, scalar_vec(0.0),
                           scalar_mat(-1.0), 1),
                  std::invalid_argument);
}

TEST_CASE("two-filter error is identically zero for equal parameters") {
  auto model = make_ar1(kPhi0, kQ, kR);
  const ParameterVector theta0(kPhi0);
  const FilterInit init{scalar_vec(0.0), scalar_mat(kStationaryVar)};
  const Trajectory traj = simulate(*model, theta0, 100, init.x0, init.P0, 7);
  const auto err =
      two_filter_exact_error(traj.observations, *model, theta0, theta0, init);
  for (const auto& e : err) {
    CHECK(e.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("reference-scenario curves co-move") {
  // Only the qualitative agreement of the two curves is claimed and
  // checked; no fixed target values exist for this comparison.
  auto model = make_ar1(kPhi0, kQ, kR);
  const ParameterVector theta0(kPhi0), theta(kPhiBiased);
  const FilterInit init{scalar_vec(0.0), scalar_mat(kStationaryVar)};
  const Trajectory traj = simulate(*model, theta0, 100, init.x0, init.P0, 42);
  const auto cmp = compare_error_paths(*model, theta0, theta,
                                       traj.observations, init, init.P0);
  CHECK_FALSE(cmp.ekf_reference);
  REQUIRE(cmp.exact.size() == 100);

  double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
  const int n = static_cast<int>(cmp.exact.size());
  for (int t = 0; t < n; ++t) {
    const double a = cmp.exact[t](0), b = cmp.approx[t](0);
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const double corr = (sxy / n - sx / n * sy / n) /
                      std::sqrt((sxx / n - sx / n * sx / n) *
                                (syy / n - sy / n * sy / n));
  // measured 0.89 on this seed at eps = 0.15; the gap is the O(eps)
  // gain-sensitivity term, cf. the defect-identity test in the bias suite
  CHECK(corr > 0.85);
  CHECK(cmp.max_gap ==
        doctest::Approx(
            (*std::max_element(cmp.abs_gap.begin(), cmp.abs_gap.end(),
                               [](const auto& a, const auto& b) {
                                 return a.maxCoeff() < b.maxCoeff();
                               })).maxCoeff()));
}

TEST_CASE("seed splitting passes the collision sanity check") {
  std::set<std::array<double, 4>> seen;
  for (std::uint64_t rep = 0; rep < 1000; ++rep) {
    GaussianStream g(split_seed(0xFEEDFACE, rep));
    std::array<double, 4> tuple{};
    for (auto& v : tuple) {
      v = g.next();
    }
    CHECK(seen.insert(tuple).second);
  }
}

TEST_CASE("monte carlo moments match the covariance recursion (reduced N)") {
  auto model = make_ar1(kPhi0, kQ, kR);
  const ParameterVector theta0(kPhi0), theta(kPhiBiased);
  const BiasSpec eps(kEps);
  const FilterInit init{scalar_vec(0.0), scalar_mat(kStationaryVar)};
  const int check[] = {1, 5, 20, 50};

  const auto mc = monte_carlo_moments(*model, theta0, theta, 50, 20000, 909,
                                      check, scalar_vec(0.0),
                                      scalar_mat(kStationaryVar), init);
  REQUIRE(mc.replications == 20000);

  // theory: gains of a linear filter are data independent, any run will do
  const Trajectory traj = simulate(*model, theta0, 50, init.x0, init.P0, 1);
  const auto path = run_filter(*model, theta, traj.observations, init);
  const auto steps = propagate_bias(*model, theta, eps, path, init, init.P0);

  const auto rows = compare_covariances(mc, steps);
  REQUIRE(rows.size() == 4 * 6);
  for (const auto& row : rows) {
    INFO(row.entry, " theory=", row.theory, " mc=", row.empirical, " z=", row.z);
    CHECK(std::abs(row.z) <= 4.0);
  }

  // P at t = 50 against the closed form
  const auto& last = mc.at_times.back();
  CHECK(std::abs(last.P.value(0, 0) - kStationaryVar) <= 4.0 * last.P.se(0, 0));

  // empirical covariance matrices are symmetric PSD by construction
  for (const auto& mm : mc.at_times) {
    Eigen::Matrix2d full;
    full << mm.V.value(0, 0), mm.S.value(0, 0), mm.S.value(0, 0),
        mm.P.value(0, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(full);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("monte carlo rejects degenerate inputs") {
  auto model = make_ar1(kPhi0, kQ, kR);
  const ParameterVector theta0(kPhi0);
  const FilterInit init{scalar_vec(0.0), scalar_mat(kStationaryVar)};
  const int check[] = {1};
  CHECK_THROWS_AS(monte_carlo_moments(*model, theta0, theta0, 10, 1, 1, check,
                                      scalar_vec(0.0), scalar_mat(1.0), init),
                  std::invalid_argument);
  const int bad_time[] = {11};
  CHECK_THROWS_AS(monte_carlo_moments(*model, theta0, theta0, 10, 100, 1,
                                      bad_time, scalar_vec(0.0), scalar_mat(1.0),
                                      init),
                  std::invalid_argument);
}

TEST_CASE("jackknife SE agrees with the brute-force leave-one-out computation") {
  const int N = 60;
  GaussianStream g(4242);
  Eigen::VectorXd a(N), b(N);
  for (int i = 0; i < N; ++i) {
    a(i) = g.next();
    b(i) = 0.4 * a(i) + g.next();
  }
  a.array() -= a.mean();
  b.array() -= b.mean();

  std::vector<double> loo;
  for (int drop = 0; drop < N; ++drop) {
    double sa = 0, sb = 0;
    for (int i = 0; i < N; ++i) {
      if (i == drop) continue;
      sa += a(i);
      sb += b(i);
    }
    const double ma = sa / (N - 1), mb = sb / (N - 1);
    double c = 0;
    for (int i = 0; i < N; ++i) {
      if (i == drop) continue;
      c += (a(i) - ma) * (b(i) - mb);
    }
    loo.push_back(c / (N - 2));
  }
  double mean_loo = 0;
  for (double v : loo) mean_loo += v;
  mean_loo /= N;
  double ss = 0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  const double brute = std::sqrt((N - 1.0) / N * ss);

  CHECK(jackknife_cov_se(a, b) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("order check: theta-free gain with curved shift has slope two") {
  // A, C and the noise scales do not depend on theta, so the gain is exact
  // under the bias and the residual is a pure quadratic Taylor remainder.
  ShiftModel model(0.6, kQ, kR, /*curved=*/true);
  const ParameterVector theta0(0.8);
  const double scales[] = {0.2, 0.1, 0.05, 0.025};
  const auto fit = order_of_accuracy(model, theta0, scalar_vec(1.0), scales, 100, 6);
  CHECK_FALSE(fit.exact_to_machine);
  INFO("residuals: ", fit.residuals[0], " ", fit.residuals[1], " ",
       fit.residuals[2], " ", fit.residuals[3]);
  CHECK(fit.slope >= 1.8);
  CHECK(fit.slope <= 2.2);
}

TEST_CASE("order check: affine-in-theta shift is exact to machine precision") {
  ShiftModel model(0.6, kQ, kR, /*curved=*/false);
  const ParameterVector theta0(0.8);
  const double scales[] = {0.2, 0.1, 0.05};
  const auto fit = order_of_accuracy(model, theta0, scalar_vec(1.0), scales, 80, 6);
  CHECK(fit.exact_to_machine);
}

TEST_CASE("order check input validation") {
  ShiftModel model(0.6, kQ, kR, true);
  const ParameterVector theta0(0.8);
  const double two[] = {0.1, 0.05};
  CHECK_THROWS_AS(order_of_accuracy(model, theta0, scalar_vec(1.0), two, 50, 1),
                  std::invalid_argument);
  const double equal[] = {0.1, 0.1, 0.1};
  CHECK_THROWS_AS(order_of_accuracy(model, theta0, scalar_vec(1.0), equal, 50, 1),
                  std::invalid_argument);
  const double neg[] = {0.1, -0.05, 0.025};
  CHECK_THROWS_AS(order_of_accuracy(model, theta0, scalar_vec(1.0), neg, 50, 1),
                  std::invalid_argument);
}

TEST_CASE("order check is deterministic") {
  ShiftModel model(0.6, kQ, kR, true);
  const ParameterVector theta0(0.8);
  const double scales[] = {0.2, 0.1, 0.05};
  const auto f1 = order_of_accuracy(model, theta0, scalar_vec(1.0), scales, 60, 9);
  const auto f2 = order_of_accuracy(model, theta0, scalar_vec(1.0), scales, 60, 9);
  for (std::size_t i = 0; i < f1.residuals.size(); ++i) {
    CHECK(f1.residuals[i] == f2.residuals[i]);
  }
  CHECK(f1.slope == f2.slope);
}
