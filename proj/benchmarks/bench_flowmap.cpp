#include <benchmark/benchmark.h>

#include <random>

#include <flowmap/discretize.hpp>
#include <flowmap/families.hpp>
#include <flowmap/highd.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/oned.hpp>
#include <flowmap/rates.hpp>
#include <flowmap/terminal.hpp>

using namespace flowmap;

static void BM_ReluClosedForm(benchmark::State& state) {
  Schedule s(1);
  s.append(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, 1.0), {0.2}), 0.7);
  double x = 1.5;
  for (auto _ : state) benchmark::DoNotOptimize(flow_eval(s, {x}));
}
BENCHMARK(BM_ReluClosedForm);

static void BM_Rk45Tanh2d(benchmark::State& state) {
  Schedule s(2);
  s.append(activation_field(Activation::tanh, Matrix::from_rows({{1.0, 0.5}, {-0.3, 1.0}}),
                            Matrix::from_rows({{1.0, -1.0}, {0.5, 1.0}}), {0.1, -0.2}),
           1.0);
  for (auto _ : state) benchmark::DoNotOptimize(flow_eval(s, {0.3, -0.4}));
}
BENCHMARK(BM_Rk45Tanh2d);

static void BM_MatchPoints(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<double> xs(m), ys(m);
  for (std::size_t k = 0; k < m; ++k) {
    xs[k] = 0.1 + 0.8 * k / static_cast<double>(m);
    ys[k] = -1.0 + 2.5 * k / static_cast<double>(m);
  }
  const PointMatchProblem p{xs, ys, relu_well_1d(0.0, 1.0), 1e-6};
  for (auto _ : state) benchmark::DoNotOptimize(match_points(p));
}
BENCHMARK(BM_MatchPoints)->Arg(2)->Arg(4)->Arg(6);

static void BM_HeavisideCompile(benchmark::State& state) {
  const auto prof = tv_log_derivative(builtin_target("pwl5", 1));
  for (auto _ : state) benchmark::DoNotOptimize(compile_heaviside_flow(prof, 0.0));
}
BENCHMARK(BM_HeavisideCompile);

static void BM_EulerForward(benchmark::State& state) {
  Schedule s(2);
  s.append(activation_field(Activation::sigmoid, Matrix::from_rows({{-1.0, 0.2}, {0.4, 0.7}}),
                            Matrix::from_rows({{2.0, 0.0}, {0.0, -1.0}}), {0.0, 0.3}),
           1.0);
  const auto net = euler_discretize(s, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward({0.2, 0.6}));
}
BENCHMARK(BM_EulerForward)->Arg(256)->Arg(1024);

static void BM_MonteCarloLp(benchmark::State& state) {
  Schedule s(2);
  s.append(affine_field(Matrix::identity(2), {0.0, 0.0}), 0.2);
  const auto F = builtin_target("swirl", 2);
  for (auto _ : state) benchmark::DoNotOptimize(lp_error_mc(s, F, 2.0, 10000, 1));
}
BENCHMARK(BM_MonteCarloLp)->Unit(benchmark::kMillisecond);

static void BM_SeparateLattice(benchmark::State& state) {
  const auto pts = grid_corners(2, 3);
  const auto well = relu_well_nd(2);
  for (auto _ : state) benchmark::DoNotOptimize(separate_points(pts, well, 0.1));
}
BENCHMARK(BM_SeparateLattice)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
