#include <benchmark/benchmark.h>

#include "vecspin/finiten.hpp"
#include "vecspin/functional.hpp"
#include "vecspin/varforms.hpp"

#include <random>

using namespace vecspin;

namespace {

StepPath two_level_path(int dim) {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd l1(dim, dim), l2(dim, dim);
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      l1(i, j) = gauss(rng);
      l2(i, j) = gauss(rng);
    }
  const Eigen::MatrixXd a = l1 * l1.transpose();
  const Eigen::MatrixXd b = a + l2 * l2.transpose();
  std::vector<PsdMatrix> vals{PsdMatrix(SymMatrix::from_dense(a)),
                              PsdMatrix(SymMatrix::from_dense(b))};
  return StepPath({0.0, 0.4, 1.0}, std::move(vals));
}

MixtureModel bench_model(int dim) {
  return MixtureModel(dim, {{1, std::vector<double>(dim, 0.3)},
                            {2, std::vector<double>(dim, 0.8)}});
}

void BM_sqrt_psd(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  const PsdMatrix a = random_psd(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sqrt_psd(a));
}
BENCHMARK(BM_sqrt_psd)->Arg(2)->Arg(4)->Arg(8);

void BM_parisi_functional_gh(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const MixtureModel m = bench_model(d);
  const SpinMeasure p1 = SpinMeasure::potts(d);
  const StepPath pi = two_level_path(d);
  QuadratureSpec quad;
  quad.gh_nodes = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(parisi_functional(m, p1, pi, SymMatrix(d), quad).value);
}
BENCHMARK(BM_parisi_functional_gh)->Args({1, 20})->Args({2, 12})->Args({2, 20});

void BM_parisi_functional_mc(benchmark::State& state) {
  const MixtureModel m = bench_model(2);
  const SpinMeasure p1 = SpinMeasure::potts(2);
  const StepPath pi = two_level_path(2);
  QuadratureSpec quad;
  quad.mode = QuadMode::monte_carlo;
  quad.mc_samples = state.range(0);
  quad.seed = 3;
  for (auto _ : state)
    benchmark::DoNotOptimize(parisi_functional(m, p1, pi, SymMatrix(2), quad).value);
}
BENCHMARK(BM_parisi_functional_mc)->Arg(20000)->Arg(100000);

void BM_cascade_oracle(benchmark::State& state) {
  const MixtureModel m = bench_model(1);
  const SpinMeasure p1 = SpinMeasure::ising();
  const StepPath pi = two_level_path(1);
  CascadeSpec spec;
  spec.top_k = static_cast<int>(state.range(0));
  spec.replicas = 200;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        parisi_functional_cascade_oracle(m, p1, pi, SymMatrix(1), spec).estimate.value);
}
BENCHMARK(BM_cascade_oracle)->Arg(500)->Arg(2000);

void BM_enumerate_free_energy(benchmark::State& state) {
  const MixtureModel m = bench_model(2);
  const SpinMeasure p1 = SpinMeasure::potts(2);
  GibbsSpec spec;
  spec.n = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(free_energy_finite(m, p1, spec, 2).value);
}
BENCHMARK(BM_enumerate_free_energy)->Arg(8)->Arg(12);

void BM_parisi_value(benchmark::State& state) {
  const MixtureModel m = bench_model(1);
  const SpinMeasure p1 = SpinMeasure::ising();
  OptimizerSpec spec;
  spec.levels = 2;
  spec.restarts = 2;
  spec.max_evals = 600;
  for (auto _ : state)
    benchmark::DoNotOptimize(parisi_value(m, p1, SymMatrix(1), spec).value);
}
BENCHMARK(BM_parisi_value);

}  // namespace

BENCHMARK_MAIN();
