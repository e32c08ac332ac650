#include <benchmark/benchmark.h>

#include <kfbias/bias.hpp>
#include <kfbias/oracle.hpp>
#include <kfbias/simulate.hpp>

using namespace kfbias;

namespace {

Eigen::VectorXd sv(double v) { return Eigen::VectorXd::Constant(1, v); }
Eigen::MatrixXd sm(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

constexpr double kStationary = 0.588235294117647;

void BM_FilterRun(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  auto model = make_ar1(0.7, 0.3, 0.5);
  const ParameterVector theta(0.85);
  const FilterInit init{sv(0.0), sm(kStationary)};
  const Trajectory traj =
      simulate(*model, ParameterVector(0.7), T, sv(0.0), sm(kStationary), 1);
  for (auto _ : state) {
    auto path = run_filter(*model, theta, traj.observations, init);
    benchmark::DoNotOptimize(path.back().xhat(0));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_FilterRun)->Arg(100)->Arg(1000);

void BM_BiasPropagation(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  auto model = make_ar1(0.7, 0.3, 0.5);
  const ParameterVector theta(0.85);
  const BiasSpec eps(0.15);
  const FilterInit init{sv(0.0), sm(kStationary)};
  const Trajectory traj =
      simulate(*model, ParameterVector(0.7), T, sv(0.0), sm(kStationary), 1);
  const auto path = run_filter(*model, theta, traj.observations, init);
  for (auto _ : state) {
    auto steps = propagate_bias(*model, theta, eps, path, init, init.P0);
    benchmark::DoNotOptimize(steps.back().cov.Vy(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_BiasPropagation)->Arg(100)->Arg(1000);

void BM_SteadyStateRiccati(benchmark::State& state) {
  auto model = make_ar1(0.85, 0.3, 0.5);
  const auto sys =
      linearize_ekf(*model, ParameterVector(0.85), sv(0.0), sv(0.0));
  for (auto _ : state) {
    auto rr = steady_state_riccati(sys, 1e-12);
    benchmark::DoNotOptimize(rr.gain(0, 0));
  }
}
BENCHMARK(BM_SteadyStateRiccati);

void BM_MonteCarloMoments(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  auto model = make_ar1(0.7, 0.3, 0.5);
  const ParameterVector theta0(0.7), theta(0.85);
  const FilterInit init{sv(0.0), sm(kStationary)};
  const int check[] = {1, 5, 20, 50};
  for (auto _ : state) {
    auto mc = monte_carlo_moments(*model, theta0, theta, 50, N, 9, check,
                                  sv(0.0), sm(kStationary), init);
    benchmark::DoNotOptimize(mc.at_times.back().P.value(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * N);
}
BENCHMARK(BM_MonteCarloMoments)->Unit(benchmark::kMillisecond)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
