// Serial reference against the OpenMP path for the batch kernels used in
// training and evaluation. Run with PPWGAN_THREADS to cap the thread count.

#include <benchmark/benchmark.h>

#include <vector>

#include "ppwgan/distance.hpp"
#include "ppwgan/eval.hpp"
#include "ppwgan/neural.hpp"
#include "ppwgan/simulate.hpp"
#include "ppwgan/wgan.hpp"

using namespace ppwgan;

namespace {

const Window kWindow(presets::kHorizon);

parallel::Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? parallel::Exec::threaded : parallel::Exec::serial;
}

std::vector<EventSequence> noise(std::size_t m) {
  RngStream rng(1, 0);
  std::vector<EventSequence> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(simulate_homogeneous(4.5, kWindow, rng));
  return out;
}

Dataset sc_data(std::size_t n) {
  const IntensityModel models[] = {presets::standard_sc()};
  const double w[] = {1.0};
  return make_dataset(models, w, n, kWindow, 2);
}

// One generator update: forward, critic forward, backward through both.
void BM_GeneratorStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  RngStream rng(3, 0);
  const auto theta = GeneratorParams::random(64, rng);
  const auto w = CriticParams::random(64, rng);
  const auto z = noise(m);
  const std::vector<double> upstream(m, -1.0 / static_cast<double>(m));
  std::vector<GeneratorTrace> gt;
  std::vector<CriticTrace> ct;
  for (auto _ : state) {
    const auto fake = generator_forward_batch(theta, z, kWindow, &gt, exec_of(state));
    critic_forward_batch(w, fake, &ct, exec_of(state));
    benchmark::DoNotOptimize(generator_backward_batch(theta, w, gt, ct, upstream, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CriticStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  RngStream rng(4, 0);
  const auto w = CriticParams::random(64, rng);
  const auto real = sc_data(m).sequences;
  const std::vector<double> upstream(m, 1.0 / static_cast<double>(m));
  std::vector<CriticTrace> ct;
  for (auto _ : state) {
    critic_forward_batch(w, real, &ct, exec_of(state));
    benchmark::DoNotOptimize(critic_backward_batch(w, ct, upstream, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PairDistances(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto a = sc_data(m).sequences;
  const auto b = noise(m);
  std::vector<double> d(m);
  for (auto _ : state) {
    parallel::for_each_index(
        m, [&](std::size_t i) { d[i] = star_distance(a[i], b[i], kWindow); }, exec_of(state));
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EmpiricalIntensity(benchmark::State& state) {
  const auto data = sc_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_intensity(data, kDefaultBinWidth, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// Second argument: 0 serial, 1 threaded.
BENCHMARK(BM_GeneratorStep)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CriticStep)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairDistances)->ArgsProduct({{256, 4096}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EmpiricalIntensity)->ArgsProduct({{2000, 20000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
