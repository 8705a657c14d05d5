#include <benchmark/benchmark.h>

#include "tsattr/attribution.hpp"
#include "tsattr/network.hpp"
#include "tsattr/perturbation.hpp"
#include "tsattr/rng.hpp"

using namespace tsattr;

namespace {

Network make_net() {
  auto net = Network::initialize(Architecture{}, 1);
  Rng rng(2);
  for (auto& v : net.tensor("head.weight")) v = rng.uniform() - 0.5;
  return net;
}

std::vector<double> make_series(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(150);
  for (auto& v : x) v = rng.normal();
  return x;
}

void BM_Forward(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(3);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
}
BENCHMARK(BM_Forward);

void BM_IncrementalEdit(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(4);
  auto editor = net.editor(x);
  int i = 0;
  for (auto _ : state) {
    editor->set(i, 0.0);
    benchmark::DoNotOptimize(editor->predict());
    i = (i + 1) % 150;
  }
}
BENCHMARK(BM_IncrementalEdit);

void BM_InputGradient(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(5);
  for (auto _ : state) benchmark::DoNotOptimize(net.input_gradient(x, 1));
}
BENCHMARK(BM_InputGradient);

void BM_ParameterGradient(benchmark::State& state) {
  const auto net = make_net();
  std::vector<std::vector<double>> xs;
  std::vector<Example> batch;
  for (int b = 0; b < state.range(0); ++b) xs.push_back(make_series(10 + static_cast<std::uint64_t>(b)));
  for (int b = 0; b < state.range(0); ++b) batch.push_back({xs[static_cast<std::size_t>(b)], b % 2});
  for (auto _ : state) benchmark::DoNotOptimize(net.parameter_gradient(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParameterGradient)->Arg(1)->Arg(64);

void BM_Occlusion(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(6);
  for (auto _ : state) benchmark::DoNotOptimize(occlusion(net, x));
}
BENCHMARK(BM_Occlusion);

void BM_IntegratedGradients(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(7);
  for (auto _ : state) benchmark::DoNotOptimize(integrated_gradients(net, x, 50));
}
BENCHMARK(BM_IntegratedGradients);

void BM_DegradationCurves(benchmark::State& state) {
  const auto net = make_net();
  const auto x = make_series(8);
  const auto scores = make_series(9);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_degradation(net, x, scores, Strategy::Gaussian, 60, 1));
}
BENCHMARK(BM_DegradationCurves);

}  // namespace

BENCHMARK_MAIN();
