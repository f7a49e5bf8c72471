#include "reeblab/section.hpp"
#include "reeblab/trap.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace reeblab;

namespace {

Vec sphere_point() {
  Vec p(4);
  p << 0.6, 0.0, 0.0, 0.8;
  return p;
}

void BM_ReebSolve(benchmark::State& state) {
  const ContactModel m = s3_ellipsoid(0.3);
  const Vec p = sphere_point();
  for (auto _ : state) benchmark::DoNotOptimize(reeb_field(m, p));
}
BENCHMARK(BM_ReebSolve);

void BM_ReebSolveFiniteDifference(benchmark::State& state) {
  const ContactModel m = s3_ellipsoid(0.3).with_finite_differences();
  const Vec p = sphere_point();
  for (auto _ : state) benchmark::DoNotOptimize(reeb_field(m, p));
}
BENCHMARK(BM_ReebSolveFiniteDifference);

void BM_HamiltonianField(benchmark::State& state) {
  const ContactModel m = r3_standard();
  const ScalarField h([](const Vec& p) { return 1.5 + 0.3 * std::sin(p(0)) * p(1); },
                      [](const Vec& p) {
                        Vec g(3);
                        g << 0.3 * std::cos(p(0)) * p(1), 0.3 * std::sin(p(0)), 0.0;
                        return g;
                      });
  Vec p(3);
  p << 0.3, -0.2, 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(field_of_hamiltonian(m, h, p));
}
BENCHMARK(BM_HamiltonianField);

// One period of the round Reeb flow, step 1e-2.
void BM_IntegrateRk4(benchmark::State& state) {
  const FlowField f = reeb_flow(s3_ellipsoid(0.0));
  IntegratorConfig c;
  c.t_max = kTwoPi;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(f, sphere_point(), c));
}
BENCHMARK(BM_IntegrateRk4)->Unit(benchmark::kMillisecond);

void BM_IntegrateRkf45(benchmark::State& state) {
  const FlowField f = reeb_flow(s3_ellipsoid(0.0));
  IntegratorConfig c;
  c.method = Method::rkf45;
  c.t_max = kTwoPi;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(f, sphere_point(), c));
}
BENCHMARK(BM_IntegrateRkf45)->Unit(benchmark::kMillisecond);

void BM_ClassifyPeriodic(benchmark::State& state) {
  const FlowField f = reeb_flow(s3_ellipsoid((std::sqrt(5.0) - 1.0) / 2.0));
  IntegratorConfig c;
  c.t_max = 20.0;
  Vec p(4);
  p << 1.0, 0.0, 0.0, 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(classify_orbit(f, p, c));
}
BENCHMARK(BM_ClassifyPeriodic)->Unit(benchmark::kMillisecond);

void BM_ReturnMapTwist(benchmark::State& state) {
  const FlowField f = twist_suspension(2.0, 0.5).reeb();
  const SectionSpec sec = solid_torus_section();
  for (auto _ : state) benchmark::DoNotOptimize(return_map(f, sec, Vec2(0.4, 0.2)));
}
BENCHMARK(BM_ReturnMapTwist)->Unit(benchmark::kMillisecond);

void BM_ReturnMapStage2(benchmark::State& state) {
  const FlowField f = suspend(fayad_katok_stage(2)).reeb();
  const SectionSpec sec = solid_torus_section();
  for (auto _ : state) benchmark::DoNotOptimize(return_map(f, sec, Vec2(0.4, 0.2), 200.0, 5e-3));
}
BENCHMARK(BM_ReturnMapStage2)->Unit(benchmark::kMillisecond);

void BM_TrapField(benchmark::State& state) {
  const TrapModel trap = build_trap();
  Vec p(5);
  p << 1.05, 0.1, 0.2, 0.95, -0.3;
  for (auto _ : state) benchmark::DoNotOptimize(trap.field()(p));
}
BENCHMARK(BM_TrapField);

}  // namespace

BENCHMARK_MAIN();
