#include <benchmark/benchmark.h>

#include "aeslab/dsp/spectral.hpp"
#include "aeslab/rng.hpp"
#include "aeslab/synth/scene.hpp"

using namespace aeslab;

namespace {

TimeSignal random_signal(size_t len, uint64_t seed) {
  Rng rng(seed);
  TimeSignal s(len);
  for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

static void BM_Analyze(benchmark::State& state) {
  const dsp::FrameParams fp;
  const auto s = random_signal(static_cast<size_t>(state.range(0)), 1);
  for (auto _ : state) {
    auto spec = dsp::analyze(s, fp);
    benchmark::DoNotOptimize(spec.data.data());
  }
  state.SetItemsProcessed(state.iterations() * fp.frame_count(s.size()));
}
BENCHMARK(BM_Analyze)->Arg(16000)->Arg(160000);

static void BM_RoundTrip(benchmark::State& state) {
  const dsp::FrameParams fp;
  const auto s = random_signal(static_cast<size_t>(state.range(0)), 2);
  for (auto _ : state) {
    auto rec = dsp::synthesize(dsp::analyze(s, fp), fp);
    benchmark::DoNotOptimize(rec.data());
  }
}
BENCHMARK(BM_RoundTrip)->Arg(16000)->Arg(160000);

static void BM_ApplyMaskFrame(benchmark::State& state) {
  Rng rng(3);
  std::vector<dsp::Complex> y(257), m(257), e(257);
  for (int k = 0; k < 257; ++k) {
    y[static_cast<size_t>(k)] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    m[static_cast<size_t>(k)] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  for (auto _ : state) {
    dsp::apply_mask_frame(y.data(), m.data(), e.data(), 257);
    benchmark::DoNotOptimize(e.data());
  }
}
BENCHMARK(BM_ApplyMaskFrame);

static void BM_ConvolveRir(benchmark::State& state) {
  const auto x = random_signal(160000, 4);
  const auto h = random_signal(static_cast<size_t>(state.range(0)), 5);
  for (auto _ : state) {
    auto d = synth::convolve_truncated(x, h);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_ConvolveRir)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
