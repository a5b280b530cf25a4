#include <benchmark/benchmark.h>

#include <random>

#include "hybrid_spkr/corpus.hpp"
#include "hybrid_spkr/frontend.hpp"
#include "hybrid_spkr/hybrid.hpp"
#include "hybrid_spkr/mlp.hpp"
#include "hybrid_spkr/vq.hpp"

using namespace hybrid_spkr;

namespace {

FeatureSet cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FeatureSet out(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : row) v = g(rng);
    out.push_back(row);
  }
  return out;
}

AudioClip voice_clip(double seconds) {
  auto spec = synthetic_voices(SyntheticCorpusConfig{})[0];
  spec.min_duration_s = spec.max_duration_s = seconds;
  return synthesize_clip(spec, 0);
}

void BM_ExtractLpcc(benchmark::State& state) {
  const auto clip = voice_clip(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_lpcc(clip));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clip.samples.size()));
}
BENCHMARK(BM_ExtractLpcc)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_LbgTrain(benchmark::State& state) {
  const auto frames = cloud(900, 12, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lbg_train(frames, static_cast<int>(state.range(0)), 7));
}
BENCHMARK(BM_LbgTrain)->DenseRange(3, 7, 2)->Unit(benchmark::kMillisecond);

void BM_QuantizeDistortion(benchmark::State& state) {
  const auto frames = cloud(200, 12, 2);
  Codebook cb;
  cb.size_bits = static_cast<int>(state.range(0));
  cb.centroids = cloud(std::size_t{1} << cb.size_bits, 12, 3);
  for (auto _ : state) benchmark::DoNotOptimize(quantize_distortion(frames, cb, DistortionCriterion::kMse));
}
BENCHMARK(BM_QuantizeDistortion)->Arg(5)->Arg(7)->Unit(benchmark::kMicrosecond);

void BM_LmEpoch(benchmark::State& state) {
  const auto pos = cloud(static_cast<std::size_t>(state.range(0)), 12, 4);
  const auto neg = cloud(static_cast<std::size_t>(state.range(0)), 12, 5);
  TrainConfig cfg;
  cfg.n_starts = 1;
  cfg.epochs_per_start = 1;
  cfg.final_epochs = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lm_train(pos, neg, cfg));
}
BENCHMARK(BM_LmEpoch)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_HybridIdentify(benchmark::State& state) {
  const std::size_t n = 10;
  std::vector<SpeakerModel> models;
  for (std::size_t s = 0; s < n; ++s) {
    SpeakerModel m;
    m.id = "s" + std::to_string(s);
    m.codebook.size_bits = 5;
    m.codebook.centroids = cloud(32, 12, 10 + s);
    m.mlp = MlpModel::zeros();
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& w : m.mlp.w1) w = u(rng);
    for (double& w : m.mlp.w2) w = u(rng);
    models.push_back(std::move(m));
  }
  const auto frames = cloud(200, 12, 99);
  const HybridConfig cfg{0.1, static_cast<std::size_t>(state.range(0)), DistortionCriterion::kMse};
  for (auto _ : state) benchmark::DoNotOptimize(hybrid_identify(frames, models, cfg));
}
BENCHMARK(BM_HybridIdentify)->Arg(1)->Arg(2)->Arg(10)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
