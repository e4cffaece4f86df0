#include <cmath>

#include <benchmark/benchmark.h>

#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/hj_solver.hpp"
#include "jumpkit/kinetic_solver.hpp"
#include "jumpkit/pdmp.hpp"

namespace jumpkit {
namespace {

double tent(std::span<const double> x) { return std::min(std::abs(x[0]), 1.0); }

void BM_SolveH_Ball3(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_ball(3, 1.0);
  const Vec p{0.9, 0.3, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(solve_H(m, p).H);
}
BENCHMARK(BM_SolveH_Ball3);

void BM_SolveH_Interval(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  const Vec p{2.0};
  for (auto _ : state) benchmark::DoNotOptimize(solve_H(m, p).H);
}
BENCHMARK(BM_SolveH_Interval);

void BM_Legendre_Ball2(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_ball(2, 1.0);
  const Vec v{0.4, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(legendre(m, v).L);
}
BENCHMARK(BM_Legendre_Ball2);

void BM_HopfLaxLattice(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(HopfLax(m).speed());
}
BENCHMARK(BM_HopfLaxLattice)->Unit(benchmark::kMillisecond);

void BM_LaxFriedrichs(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0);
  const auto cells = static_cast<std::size_t>(state.range(0));
  GridField init;
  init.times = {0.0};
  init.x = uniform_axis(-2.0, 4.0 / cells, cells);
  for (double x : init.x) init.values.push_back(tent(std::span<const double>(&x, 1)));
  LaxFriedrichsOptions o;
  o.boundary = BoundaryCondition::Periodic;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(lax_friedrichs_solve(m, init, 0.5, o).values.back());
}
BENCHMARK(BM_LaxFriedrichs)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KineticSolve(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_interval(-1.0, 1.0, static_cast<int>(state.range(0)));
  PeriodicGrid grid;
  grid.cells = 500;
  const GridField init = grid.sample(periodic(tent, grid.lower, grid.length));
  KineticOptions o;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(kinetic_solve(m, init, 0.1, 0.1, o).steps);
}
BENCHMARK(BM_KineticSolve)->Arg(32)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_SamplePaths(benchmark::State& state) {
  const auto m = VelocityMeasure::uniform_ball(2, 1.0);
  SampleOptions o;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_paths(m, 10000, 10.0, 1, o).gap_sum);
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_SamplePaths)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace jumpkit

BENCHMARK_MAIN();
