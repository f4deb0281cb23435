#include <benchmark/benchmark.h>

#include "aeslab/model/crn.hpp"
#include "aeslab/rng.hpp"

using namespace aeslab;

namespace {

ad::Tensor random_features(int frames, uint64_t seed) {
  Rng rng(seed);
  ad::Tensor t({frames, 264, 4});
  for (double& v : t.v) v = rng.uniform(-0.5, 0.5);
  return t;
}

void bench_inference(benchmark::State& state, const model::CrnConfig& cfg) {
  const auto m = model::CrnModel::build(cfg, 1);
  const int frames = 16;
  const auto features = random_features(frames, 2);
  auto st = m.make_state();
  for (auto _ : state) {
    auto mask = m.forward_inference<double>(features, st);
    benchmark::DoNotOptimize(mask.v.data());
  }
  state.SetItemsProcessed(state.iterations() * frames);
  state.counters["frames/s"] =
      benchmark::Counter(static_cast<double>(state.iterations() * frames),
                         benchmark::Counter::kIsRate);
}

}  // namespace

static void BM_Ggcrn16Forward(benchmark::State& state) {
  bench_inference(state, model::stage_config(model::AblationStage::kM5SingleGruLayer));
}
BENCHMARK(BM_Ggcrn16Forward)->Unit(benchmark::kMillisecond);

static void BM_Fcrn15Forward(benchmark::State& state) {
  bench_inference(state, model::stage_config(model::AblationStage::kFcrn15));
}
BENCHMARK(BM_Fcrn15Forward)->Unit(benchmark::kMillisecond);

static void BM_MicroForward(benchmark::State& state) {
  bench_inference(state, model::micro_config(8, 8));
}
BENCHMARK(BM_MicroForward)->Unit(benchmark::kMillisecond);

static void BM_Ggcrn16ForwardF32(benchmark::State& state) {
  const auto m =
      model::CrnModel::build(model::stage_config(model::AblationStage::kM5SingleGruLayer), 1);
  const int frames = 16;
  const auto features = random_features(frames, 2);
  auto st = m.make_state();
  for (auto _ : state) {
    auto mask = m.forward_inference<float>(features, st);
    benchmark::DoNotOptimize(mask.v.data());
  }
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_Ggcrn16ForwardF32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
