#include <benchmark/benchmark.h>

#include "freqbooth/dct.hpp"
#include "freqbooth/denoiser.hpp"
#include "freqbooth/rng.hpp"
#include "freqbooth/sampler.hpp"
#include "freqbooth/training.hpp"

using namespace freqbooth;

static void BM_Dct2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngState rng{1, 0};
  const Tensor x = gaussian({4, n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dct2(x));
}
BENCHMARK(BM_Dct2)->Arg(8)->Arg(64);

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngState rng{2, 0};
  const Tensor a = gaussian({n, n}, rng), b = gaussian({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128);

static void BM_PredictEps(benchmark::State& state) {
  const ModelConfig c = toy_model_config();
  const ParameterStore store = init_parameters(c);
  const Denoiser den(c, store);
  RngState rng{3, 0};
  const Tensor z = gaussian({4, c.latent_size(), c.latent_size()}, rng);
  Conditioning cond;
  cond.class_id = 1;
  for (auto _ : state) benchmark::DoNotOptimize(den.predict_eps(z, 100, cond));
}
BENCHMARK(BM_PredictEps);

static void BM_Sample20Steps(benchmark::State& state) {
  const ModelConfig c = toy_model_config();
  const ParameterStore store = init_parameters(c);
  Sampler sampler(c, store);
  SampleRequest req;
  req.class_id = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(req).latent);
}
BENCHMARK(BM_Sample20Steps)->Unit(benchmark::kMillisecond);

static void BM_Stage1TrainStep(benchmark::State& state) {
  const ModelConfig c = toy_model_config();
  ToyDatasetSpec spec;
  spec.train_size = 16;
  spec.test_size = 0;
  const Dataset ds = generate_dataset(spec, 0);
  const ParameterStore params = init_parameters(c);
  const TrainingSet set(ds.train, c, params);
  const NoiseSchedule sched = NoiseSchedule::linear(c.timesteps, c.beta_start, c.beta_end);
  TrainConfig tc;
  tc.stage = Stage::Stage1;
  RngState rng{4, 0};
  LossOptions lo;
  for (auto _ : state) {
    const auto batch = draw_batch(set, c, tc, rng);
    benchmark::DoNotOptimize(stage_loss(Stage::Stage1, batch, set, c, params, sched, lo).loss);
  }
}
BENCHMARK(BM_Stage1TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
