#include <benchmark/benchmark.h>

#include "ldcvae/config.hpp"
#include "ldcvae/gibbs.hpp"
#include "ldcvae/kernel.hpp"
#include "ldcvae/metrics.hpp"
#include "ldcvae/models.hpp"
#include "ldcvae/svgd.hpp"
#include "ldcvae/trainer.hpp"

using namespace ldc;

namespace {

void BM_MedianBandwidth(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor z = Rng(1).normal(n, 16);
  for (auto _ : state) benchmark::DoNotOptimize(median_bandwidth(z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MedianBandwidth)->RangeMultiplier(2)->Range(32, 512)->Complexity();

void BM_SteinDirection(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor z = rng.normal(n, 16);
  const Tensor s = rng.normal(n, 16);
  const double h = median_bandwidth(z);
  for (auto _ : state) benchmark::DoNotOptimize(stein_direction(z, s, z, h));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SteinDirection)->RangeMultiplier(2)->Range(32, 512)->Complexity();

void BM_GibbsScore(benchmark::State& state) {
  Architecture arch;
  Rng rng(3);
  DecoderNet dec(arch, rng);
  const auto b = static_cast<std::size_t>(state.range(0));
  const Tensor x = rng.normal(b, arch.data_dim, 0.5, 0.2);
  const Tensor z = rng.normal(b, arch.latent_dim);
  const GibbsPosterior post(dec, x, 10.0);
  const Pairing pair = identity_pairing(b);
  for (auto _ : state) benchmark::DoNotOptimize(post.score(z, pair));
}
BENCHMARK(BM_GibbsScore)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_LdcStep(benchmark::State& state) {
  Config cfg;
  const Architecture arch = architecture_from(cfg, 784);
  Rng rng(4);
  LdcModel model(arch, rng);
  LdcOptimizers opt = make_ldc_optimizers(cfg);
  const StepConfig sc = step_config_from(cfg);
  const auto b = static_cast<std::size_t>(state.range(0));
  const Tensor x = rng.normal(b, arch.data_dim, 0.5, 0.2);
  for (auto _ : state) {
    const Tensor eps_e = rng.normal(b, arch.noise_dim);
    const Tensor eps_s = rng.normal(b, arch.sampler_noise_dim);
    benchmark::DoNotOptimize(ldc_step(x, eps_e, eps_s, model, opt, sc));
  }
}
BENCHMARK(BM_LdcStep)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_VaeStep(benchmark::State& state) {
  Config cfg;
  const Architecture arch = architecture_from(cfg, 784);
  Rng rng(5);
  VaeModel model(arch, rng);
  VaeOptimizers opt = make_vae_optimizers(cfg);
  const auto b = static_cast<std::size_t>(state.range(0));
  const Tensor x = rng.normal(b, arch.data_dim, 0.5, 0.2);
  for (auto _ : state) {
    const Tensor eps = rng.normal(b, arch.latent_dim);
    benchmark::DoNotOptimize(vae_step(x, eps, model, opt));
  }
}
BENCHMARK(BM_VaeStep)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Mmd2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  const Tensor a = rng.normal(n, 16);
  const Tensor b = rng.normal(n, 16);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::mmd2_unbiased(a, b));
}
BENCHMARK(BM_Mmd2)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
