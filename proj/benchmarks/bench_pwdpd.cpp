#include <random>

#include <benchmark/benchmark.h>

#include "pwdpd/pipeline.hpp"

using namespace pwdpd;

namespace {

// Canonical-sized array (K=2, S=16) with a shorter message block.
struct Bench {
  Setup st;
  std::vector<TrainingResult> dpd;
  PwContext ctx;
  std::vector<double> angles;

  static Scenario scenario() {
    Scenario sc;
    sc.pa_spread = 0.3;
    sc.signal.synthesis = Synthesis::Block;
    sc.signal.n_symbols = 4;
    return sc;
  }
  Bench()
      : st(prepare(scenario())),
        dpd(train_all(st)),
        ctx(make_pw_context(st.model, 0, st.s, dpd)),
        angles(angle_grid(st.sc.sweep_range.first, st.sc.sweep_range.second, st.sc.sweep_points)) {}
};

const Bench& bench() {
  static const Bench b;
  return b;
}

void BM_AssembleStructured(benchmark::State& state) {
  const Bench& b = bench();
  const PwLayout L = build_layout(PwScheme::FF, 16, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_problem_structured(b.ctx, L, b.angles, 0.0));
}
BENCHMARK(BM_AssembleStructured)->Unit(benchmark::kMillisecond);

void BM_AssembleGeneric(benchmark::State& state) {
  const Bench& b = bench();
  const PwLayout L = build_layout(PwScheme::FF, 16, 6);
  for (auto _ : state) {
    std::vector<RadiationOperator> ops;
    ops.reserve(b.angles.size());
    for (double a : b.angles) ops.push_back(assemble_radiation_operator(b.ctx, L, a));
    benchmark::DoNotOptimize(assemble_problem(ops, assemble_radiation_operator(b.ctx, L, 0.0)));
  }
}
BENCHMARK(BM_AssembleGeneric)->Unit(benchmark::kMillisecond);

void BM_SolveKkt(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  CMat A(2 * n, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(nd(rng), nd(rng));
  QuadraticProblem p;
  p.H = A.adjoint() * A;
  p.b = CVec::Constant(n, cplx(0.5, -0.25));
  p.t0 = CRowVec::Ones(n);
  p.t0p = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_kkt(p));
}
BENCHMARK(BM_SolveKkt)->Arg(16)->Arg(96)->Arg(256);

void BM_SimulateExact(benchmark::State& state) {
  const Bench& b = bench();
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate_pa_drives(b.st.model, b.ctx.drive_dpd, SimMode::FixedPointExact));
}
BENCHMARK(BM_SimulateExact)->Unit(benchmark::kMillisecond);

void BM_TrainDpd(benchmark::State& state) {
  const Bench& b = bench();
  for (auto _ : state) benchmark::DoNotOptimize(train_all(b.st));
}
BENCHMARK(BM_TrainDpd)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
