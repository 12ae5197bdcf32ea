#include <benchmark/benchmark.h>

#include "ftb/optical_flow.hpp"
#include "ftb/scene_sim.hpp"
#include "ftb/video_event.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace ftb;

void BM_DenseFlow(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const int h = w * 3 / 4;
  ImageU8 a = testing::textured_pattern(w, h, 3);
  ImageU8 b = testing::shift_image(a, 1, 1);
  FlowParams params;
  for (auto _ : state) {
    FlowField flow = compute_flow(a, b, params);
    benchmark::DoNotOptimize(flow.du.data().data());
  }
  state.SetItemsProcessed(state.iterations() * w * h);
}
BENCHMARK(BM_DenseFlow)->Arg(160)->Arg(192)->Arg(320);

struct BounceFixture {
  SceneConfig cfg;
  Trajectory traj;
  FrameSequence seq;

  BounceFixture() {
    cfg.depth_m = 12.0;
    cfg.image_width = 192;
    cfg.image_height = 144;
    cfg.fps = 240;
    cfg.rng_seed = 9;
    traj = simulate_trajectory(cfg);
    seq = render_frames(traj, cfg);
  }
};

void BM_AnchorFlows(benchmark::State& state) {
  static BounceFixture fx;
  int c_frame = static_cast<int>(fx.traj.collision_times[0] * fx.cfg.fps);
  Mask mask = object_support_mask(fx.traj, fx.cfg, fx.seq.camera,
                                  fx.seq.timestamps[c_frame - 1]);
  std::vector<int> targets{c_frame - 3, c_frame - 2, c_frame - 1,
                           c_frame, c_frame + 1, c_frame + 2};
  for (auto _ : state) {
    auto flows = compute_anchor_flows(fx.seq, c_frame - 1, mask, {}, targets);
    benchmark::DoNotOptimize(flows.data());
  }
}
BENCHMARK(BM_AnchorFlows);

void BM_RenderFrame(benchmark::State& state) {
  SceneConfig cfg;
  cfg.depth_m = 12.0;
  cfg.image_width = 192;
  cfg.image_height = 144;
  cfg.fps = 240;
  cfg.duration_s = 0.05;
  Trajectory traj = simulate_trajectory(cfg);
  for (auto _ : state) {
    FrameSequence seq = render_frames(traj, cfg);
    benchmark::DoNotOptimize(seq.frames.data());
  }
}
BENCHMARK(BM_RenderFrame);

void BM_TrackCentroid(benchmark::State& state) {
  static BounceFixture fx;
  int c_frame = static_cast<int>(fx.traj.collision_times[0] * fx.cfg.fps);
  FrameSequence window;
  window.fps = fx.seq.fps;
  window.camera = fx.seq.camera;
  for (int i = c_frame - 10; i <= c_frame + 10; ++i) {
    window.frames.push_back(fx.seq.frames[i]);
    window.timestamps.push_back(fx.seq.timestamps[i]);
  }
  Mask mask = object_support_mask(fx.traj, fx.cfg, fx.seq.camera,
                                  window.timestamps[0]);
  for (auto _ : state) {
    CentroidTrack track = track_centroid(window, mask, {});
    benchmark::DoNotOptimize(track.points.data());
  }
}
BENCHMARK(BM_TrackCentroid);

}  // namespace
