#include <benchmark/benchmark.h>

#include "ftb/audio_event.hpp"
#include "ftb/av_correspondence.hpp"
#include "ftb/scene_sim.hpp"
#include "ftb/video_event.hpp"

namespace {

using namespace ftb;

AudioClip make_clip(double snr_db) {
  SceneConfig cfg;
  cfg.depth_m = 20.0;
  cfg.restitution = 0.0;
  cfg.noise.audio_snr_db = snr_db;
  cfg.rng_seed = 12;
  Trajectory traj = simulate_trajectory(cfg);
  return synthesize_audio(traj, cfg);
}

void BM_DetectAudioImpacts(benchmark::State& state) {
  AudioClip clip = make_clip(30.0);
  for (auto _ : state) {
    auto events = detect_audio_impacts(clip);
    benchmark::DoNotOptimize(events.data());
  }
  state.SetItemsProcessed(state.iterations() * clip.samples.size());
}
BENCHMARK(BM_DetectAudioImpacts);

void BM_LocateOnset(benchmark::State& state) {
  AudioClip clip = make_clip(30.0);
  const std::int64_t n = static_cast<std::int64_t>(clip.samples.size());
  for (auto _ : state) {
    AudioOnset onset = locate_onset(clip, 0, n);
    benchmark::DoNotOptimize(&onset);
  }
  state.SetItemsProcessed(state.iterations() * clip.samples.size());
}
BENCHMARK(BM_LocateOnset);

void BM_SynthesizeAudio(benchmark::State& state) {
  SceneConfig cfg;
  cfg.depth_m = 20.0;
  cfg.restitution = 0.0;
  cfg.noise.audio_snr_db = 30.0;
  cfg.rng_seed = 12;
  Trajectory traj = simulate_trajectory(cfg);
  for (auto _ : state) {
    AudioClip clip = synthesize_audio(traj, cfg);
    benchmark::DoNotOptimize(clip.samples.data());
  }
}
BENCHMARK(BM_SynthesizeAudio);

void BM_L1Median(benchmark::State& state) {
  std::vector<double> values;
  for (int i = 0; i < 4096; ++i) {
    values.push_back(0.5 + 0.001 * ((i * 2654435761u) % 1000));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(l1_median(values));
  }
}
BENCHMARK(BM_L1Median);

}  // namespace

BENCHMARK_MAIN();
