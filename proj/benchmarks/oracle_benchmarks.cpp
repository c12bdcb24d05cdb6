#include <random>

#include <benchmark/benchmark.h>

#include "tailrisk/tailrisk.hpp"

namespace {

using namespace tailrisk;

Dataset make_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(gen);
  }
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = normal(gen);
  return Dataset(std::move(x), std::move(y));
}

LossVector make_losses(std::size_t n) {
  std::mt19937_64 gen(n);
  std::student_t_distribution<double> t(3.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = t(gen);
  return LossVector(std::move(v));
}

void BM_Superquantile(benchmark::State& state) {
  const LossVector L = make_losses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(superquantile(L, 0.9));
  state.SetComplexityN(state.range(0));
}

void BM_ExactWeights(benchmark::State& state) {
  const LossVector L = make_losses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(exact_subgradient_weights(L, 0.9).value);
  state.SetComplexityN(state.range(0));
}

void BM_EuclideanSort(benchmark::State& state) {
  const LossVector L = make_losses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(smoothed_weights_euclidean(L, 0.9, 1.0).value);
  state.SetComplexityN(state.range(0));
}

void BM_EuclideanSelection(benchmark::State& state) {
  const LossVector L = make_losses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        smoothed_weights_euclidean(L, 0.9, 1.0, BreakpointSearch::kSelection).value);
  }
  state.SetComplexityN(state.range(0));
}

void BM_Entropic(benchmark::State& state) {
  const LossVector L = make_losses(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(smoothed_weights_entropic(L, 0.9, 1.0).value);
  state.SetComplexityN(state.range(0));
}

void BM_ExactOracle(benchmark::State& state) {
  const Dataset data = make_data(static_cast<std::size_t>(state.range(0)), 40, 1);
  const Vector w = Vector::Constant(40, 0.1);
  const LeastSquaresLoss loss;
  for (auto _ : state) benchmark::DoNotOptimize(exact_oracle(loss, data, w, 0.9).value);
  state.SetComplexityN(state.range(0));
}

void BM_SmoothedOracle(benchmark::State& state) {
  const Dataset data = make_data(static_cast<std::size_t>(state.range(0)), 40, 1);
  const Vector w = Vector::Constant(40, 0.1);
  const LeastSquaresLoss loss;
  const RiskParams params{0.9, 1000.0, Penalty::kEuclidean};
  for (auto _ : state) benchmark::DoNotOptimize(smoothed_oracle(loss, data, w, params).value);
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_Superquantile)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();
BENCHMARK(BM_ExactWeights)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();
BENCHMARK(BM_EuclideanSort)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();
BENCHMARK(BM_EuclideanSelection)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();
BENCHMARK(BM_Entropic)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity();
BENCHMARK(BM_ExactOracle)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();
BENCHMARK(BM_SmoothedOracle)->RangeMultiplier(10)->Range(1000, 100000)->Complexity();
BENCHMARK_MAIN();
