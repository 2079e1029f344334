#include <benchmark/benchmark.h>

#include "fracnls/norms.hpp"
#include "fracnls/operators.hpp"
#include "fracnls/solver.hpp"
#include "fracnls/stochastic.hpp"

using namespace fracnls;

namespace {

NoiseConfig bench_noise(int K) {
  NoiseConfig c = NoiseConfig::focused({0.65, 0.55}, K);
  c.xiDensity = 2.5;
  c.etaDensity = 2.0;
  return c;
}

ModeTrajectory bench_psi(int n, int K, int M) {
  const auto cfg = bench_noise(K);
  const ToneIntegrator integ(cfg, n, K, TimeGrid(M));
  return integ.psi(project_modes(sample_spectral_noise(cfg, n, 1), n, K));
}

}  // namespace

static void BM_SampleNoise(benchmark::State& st) {
  const auto cfg = bench_noise(32);
  const int n = static_cast<int>(st.range(0));
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(sample_spectral_noise(cfg, n, ++seed));
}
BENCHMARK(BM_SampleNoise)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

static void BM_ProjectModes(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto noise = sample_spectral_noise(bench_noise(32), n, 1);
  for (auto _ : st) benchmark::DoNotOptimize(project_modes(noise, n, 32));
}
BENCHMARK(BM_ProjectModes)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

static void BM_TonePsi(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0)), K = 32, M = 512;
  const auto cfg = bench_noise(K);
  const ToneIntegrator integ(cfg, n, K, TimeGrid(M));
  const auto V = project_modes(sample_spectral_noise(cfg, n, 1), n, K);
  for (auto _ : st) benchmark::DoNotOptimize(integ.psi(V));
}
BENCHMARK(BM_TonePsi)->DenseRange(3, 6)->Unit(benchmark::kMillisecond);

static void BM_TwistedProduct(benchmark::State& st) {
  const int K = static_cast<int>(st.range(0));
  const auto psi = bench_psi(4, K, 512);
  for (auto _ : st) benchmark::DoNotOptimize(twisted_product(psi, psi));
}
BENCHMARK(BM_TwistedProduct)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMillisecond);

static void BM_CutoffIntegral(benchmark::State& st) {
  const auto psi = bench_psi(4, 32, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(cutoff_integral(psi));
}
BENCHMARK(BM_CutoffIntegral)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond);

static void BM_XbcNorm(benchmark::State& st) {
  const auto psi = bench_psi(4, 32, static_cast<int>(st.range(0)));
  NormSpec s;
  s.kind = NormKind::Xbc;
  for (auto _ : st) benchmark::DoNotOptimize(norm_eval(psi, s));
}
BENCHMARK(BM_XbcNorm)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond);

static void BM_ExactSigma(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const TimeGrid g(256);
  for (auto _ : st) benchmark::DoNotOptimize(exact_sigma_levels(bench_noise(8), n, n, 8, g, 1.0));
}
BENCHMARK(BM_ExactSigma)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void BM_PicardSolve(benchmark::State& st) {
  const int K = 16, M = 1024, n = 3;
  const auto cfg = bench_noise(K);
  const TimeGrid g(M);
  const auto psi = bench_psi(n, K, M);
  const auto tree = make_tree(n, psi, compute_lambda(psi), exact_sigma_levels(cfg, n, n, K, g, 0.5).front());
  SolverConfig s;
  s.K = K;
  s.M = M;
  s.tau = 0.25;
  s.tol = 1e-8;
  for (auto _ : st) benchmark::DoNotOptimize(picard_solve(tree, s));
}
BENCHMARK(BM_PicardSolve)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
