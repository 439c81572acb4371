#include "selfdual/evolution.hpp"
#include "selfdual/pde.hpp"
#include "selfdual/solve.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace selfdual;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

MonotoneOperator identity() { return MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(1)); }

void BM_SolveStatic(benchmark::State& state) {
  const Lagrangian L = potential_for(MonotoneOperator::grad_convex(ConvexFunction::power_norm(4.0, 1.0, 1)), false);
  for (auto _ : state) benchmark::DoNotOptimize(solve_static(L, v1(2.0)).x);
}
BENCHMARK(BM_SolveStatic);

void BM_Evolution(benchmark::State& state) {
  const auto Tt = TimeDependentOperator::stationary(identity());
  const auto B = BoundaryOp::initial_value(v1(1.0));
  const TimeGrid g{1.0, static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(solve_evolution(Tt, B, g).cert.value);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Evolution)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_Elliptic(benchmark::State& state) {
  EllipticProblem P;
  P.T = identity();
  P.lambda = 1.0;
  P.mesh = Mesh1D{1.0, static_cast<int>(state.range(0))};
  P.g = P.mesh.sample([](double x) { return std::sin(M_PI * x); });
  for (auto _ : state) benchmark::DoNotOptimize(solve_elliptic(P).u);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Elliptic)->Arg(15)->Arg(31)->Arg(63)->Arg(127)->Arg(255)->Complexity();

void BM_FitzpatrickValue(benchmark::State& state) {
  const Lagrangian F = fitzpatrick(MonotoneGraph::sample_1d([](double y) { return y * y * y; }, -2.0, 2.0,
                                                            static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(F.value(v1(0.3), v1(0.1)));
}
BENCHMARK(BM_FitzpatrickValue)->Arg(11)->Arg(41)->Arg(161);

}  // namespace

BENCHMARK_MAIN();
