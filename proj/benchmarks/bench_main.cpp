#include <benchmark/benchmark.h>

#include "bsgd/baselines.hpp"
#include "bsgd/cso.hpp"
#include "bsgd/engine.hpp"
#include "bsgd/lower_bound.hpp"
#include "bsgd/nn.hpp"
#include "bsgd/problems.hpp"

using namespace bsgd;

namespace {

void BM_LogisticEstimator(benchmark::State& state) {
  InvariantLogisticSpec spec;
  spec.reference_size = 1;
  const InvariantLogisticProblem p(spec);
  Engine rng(1);
  const OuterSample xi = p.sample_outer(rng);
  const InnerBatch batch = p.sample_inner(xi, static_cast<int>(state.range(0)), rng);
  const Vector x = Vector::Constant(p.dim_x(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_gradient(p, x, xi, batch));
}
BENCHMARK(BM_LogisticEstimator)->Arg(1)->Arg(10)->Arg(100);

void BM_MamlEstimator(benchmark::State& state) {
  MamlSineSpec spec;
  spec.reference_tasks = spec.reference_query = spec.reference_support = 1;
  const MamlSineProblem p(spec);
  Engine rng(2);
  const Vector w = p.initial_weights(rng);
  const OuterSample xi = p.sample_outer(rng);
  const InnerBatch batch = p.sample_inner(xi, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_gradient(p, w, xi, batch));
}
BENCHMARK(BM_MamlEstimator)->Arg(5)->Arg(20)->Arg(100);

void BM_MlpHvp(benchmark::State& state) {
  Engine rng(3);
  const Mlp net = Mlp::glorot({1, 40, 40, 1}, rng);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Batch b{Matrix::Random(n, 1), Matrix::Random(n, 1)};
  const Vector v = Vector::Ones(net.weights.size());
  for (auto _ : state) benchmark::DoNotOptimize(mlp_hvp(net, b, v));
}
BENCHMARK(BM_MlpHvp)->Arg(1)->Arg(10)->Arg(100);

void BM_BsgdQuadratic(benchmark::State& state) {
  QuadraticCsoSpec spec;
  spec.shift = ShiftLaw::normal(1.0, 1.0);
  const QuadraticProblem p(spec);
  RunConfig rc;
  rc.T = state.range(0);
  rc.step = StepSchedule::strongly_convex(2.0);
  rc.batch = BatchSchedule::fixed(100);
  rc.domain = Domain::box(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0));
  rc.x1 = Vector::Constant(1, -3.0);
  rc.trace_every = rc.T;
  for (auto _ : state) benchmark::DoNotOptimize(bsgd_run(p, rc));
  state.SetItemsProcessed(state.iterations() * rc.T);
}
BENCHMARK(BM_BsgdQuadratic)->Arg(1000)->Arg(10000);

void BM_SaaLogistic(benchmark::State& state) {
  InvariantLogisticSpec spec;
  spec.reference_size = 1;
  spec.sigma2_sq = 10.0;
  const auto p = make_invariant_logistic(spec);
  RngStreams rng(4);
  const SaaInstance inst = make_saa_instance(p, state.range(0), 10, rng);
  for (auto _ : state) benchmark::DoNotOptimize(saa_solve(inst, Vector::Zero(p->dim_x())));
}
BENCHMARK(BM_SaaLogistic)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FloorRun(benchmark::State& state) {
  FloorConfig cfg;
  cfg.B_list = {0.1};
  cfg.T = state.range(0);
  cfg.n_seeds = 1;
  cfg.step_grid = {1.0};
  for (auto _ : state) benchmark::DoNotOptimize(floor_experiment(cfg, 5));
}
BENCHMARK(BM_FloorRun)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
