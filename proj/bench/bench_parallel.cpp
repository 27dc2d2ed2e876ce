// Serial reference vs OpenMP pool for the two parallel kernels: the generic
// indexed map and Monte Carlo evaluation.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "casc/config.hpp"
#include "casc/contingency.hpp"
#include "casc/optimizer.hpp"
#include "casc/parallel.hpp"
#include "casc/powerflow.hpp"
#include "casc/synthetic.hpp"

using namespace casc;

namespace {

const Scenario& scenario() {
  static const Scenario s = [] {
    SyntheticSpec spec{3000, 4600, 400, 1200, 4, 7};
    const Grid base = scale_reactances(make_synthetic_grid(spec), 100.0);
    const auto f0 = base_flows(base);
    const auto cut = generate_contingency(base, f0, {40, 0.5, 3, TreeRule::MaxFlow});
    Scenario out;
    out.grid = apply_contingency(base, cut.line_ids);
    out.initial_flows = restrict_to_lines(base, out.grid, f0);
    out.cascade.rounds = 8;
    out.cascade.alpha = 0.5;
    out.cascade.outage.kind = OutageKind::Banded;
    out.cascade.outage.epsilon = EpsilonSchedule::step(0.01, 0.05);
    return out;
  }();
  return s;
}

int workers() { return std::max(1, omp_get_num_procs()); }

double solve_task(std::size_t i) {
  const auto& s = scenario();
  auto beta = s.grid.injections();
  for (double& b : beta) b *= 1.0 + 1e-3 * static_cast<double>(i % 7);
  FlowSolver solver(s.grid);
  const auto part = islands(s.grid);
  std::vector<double> f(s.grid.line_count()), ph(s.grid.bus_count());
  solver.solve(part, beta, f, ph);
  return f[0];
}

void BM_MapSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(serial_map<double>(32, solve_task));
}
void BM_MapParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(parallel_map<double>(32, solve_task, workers()));
}

void evaluate_with(benchmark::State& st, int w) {
  Objective obj{ObjectiveKind::Mean, 32, 0.0, 11};
  const auto none = ControlSchedule::none();
  for (auto _ : st) benchmark::DoNotOptimize(evaluate(scenario(), none, obj, w));
}
void BM_EvaluateSerial(benchmark::State& st) { evaluate_with(st, 1); }
void BM_EvaluateParallel(benchmark::State& st) { evaluate_with(st, workers()); }

}  // namespace

BENCHMARK(BM_MapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
