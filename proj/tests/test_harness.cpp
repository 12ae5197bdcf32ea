#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "doctest.h"
#include "ftb/dataset.hpp"
#include "ftb/error.hpp"
#include "ftb/json_io.hpp"
#include "ftb/metrics.hpp"
#include "ftb/pipeline.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace ftb;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ftb_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetSpec tiny_spec() {
  DatasetSpec spec;
  spec.n_scenes = 3;
  spec.depth_range_m = {4.0, 20.0};
  spec.fps_set = {240};
  spec.sharp_fraction = 1.0;
  spec.multi_collision_fraction = 0.0;
  spec.seed = 4242;
  spec.t_hw_s = 1e-3;
  return spec;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path(), std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    files[fs::relative(entry.path(), root).string()] = std::move(content);
  }
  return files;
}

}  // namespace

TEST_CASE("dataset generation is byte-identical across runs") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 2;
  auto dir1 = temp_dir("determinism_a");
  auto dir2 = temp_dir("determinism_b");
  generate_dataset(spec, dir1);
  generate_dataset(spec, dir2);
  auto t1 = snapshot_tree(dir1);
  auto t2 = snapshot_tree(dir2);
  REQUIRE(!t1.empty());
  CHECK(t1 == t2);
}

TEST_CASE("multi-collision fraction is honored exactly") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 10;
  spec.fps_set = {30};
  spec.multi_collision_fraction = 0.3;
  auto dir = temp_dir("multi_fraction");
  generate_dataset(spec, dir);
  int two_collision_scenes = 0;
  for (const auto& scene : list_scene_dirs(dir)) {
    SceneTruth truth = load_truth(scene);
    CHECK(truth.collisions.size() == truth.collision_times_s.size());
    if (truth.collisions.size() == 2) ++two_collision_scenes;
  }
  CHECK(two_collision_scenes == 3);
}

TEST_CASE("generated depths cover the range roughly uniformly") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 80;
  spec.fps_set = {30};
  spec.depth_range_m = {2.0, 50.0};
  // Only metadata is needed; skip the frame rendering cost by generating
  // configs through the same seeding path.
  auto dir = temp_dir("depth_hist");
  spec.n_scenes = 60;
  generate_dataset(spec, dir);
  std::vector<double> depths;
  for (const auto& scene : list_scene_dirs(dir)) {
    depths.push_back(load_truth(scene).depth_m);
  }
  REQUIRE(depths.size() == 60);
  // 4 bins, df = 3; chi2 < 16.27 at p = 0.001.
  CHECK(testing::chi_square_uniform(depths, 2.0, 50.0, 4) < 16.27);
}

TEST_CASE("scene files round trip") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 1;
  auto dir = temp_dir("roundtrip");
  generate_dataset(spec, dir);
  auto scenes = list_scene_dirs(dir);
  REQUIRE(scenes.size() == 1);

  FrameSequence frames = load_frames(scenes[0], 240);
  CHECK(frames.fps == 240);
  CHECK(!frames.frames.empty());
  CHECK(frames.camera.focal_px > 0);
  CHECK(frames.timestamps[1] == doctest::Approx(1.0 / 240));

  AudioClip audio = load_audio(scenes[0]);
  CHECK(audio.sample_rate == 48000);
  CHECK(audio.clock_offset_s == 0.0);  // unknown at estimation time

  SceneTruth truth = load_truth(scenes[0]);
  CHECK(truth.depth_m >= 4.0);
  CHECK(truth.depth_m <= 20.0);
  CHECK(truth.t_hw_s == doctest::Approx(1e-3));
  REQUIRE(truth.collisions.size() == 1);

  CHECK(available_fps(scenes[0]) == std::vector<int>{240});
  CHECK_THROWS_AS(load_frames(scenes[0], 60), IoError);

  SceneConfig cfg = read_scene_config(scenes[0] / "scene_config.json");
  CHECK(cfg.depth_m == doctest::Approx(truth.depth_m));
}

TEST_CASE("calibration model json round trip") {
  auto dir = temp_dir("cal_json");
  CalibrationModel model;
  model.t_hw_s = 1.25e-3;
  model.v_eff = 338.5;
  model.residual_ms = 0.07;
  write_calibration(model, dir / "cal.json");
  CalibrationModel back = read_calibration(dir / "cal.json");
  CHECK(back.t_hw_s == doctest::Approx(model.t_hw_s));
  REQUIRE(back.v_eff.has_value());
  CHECK(*back.v_eff == doctest::Approx(338.5));
  CHECK(back.residual_ms == doctest::Approx(0.07));
}

TEST_CASE("pipeline recovers depth on a small noiseless suite") {
  DatasetSpec spec = tiny_spec();
  auto dir = temp_dir("pipeline_small");
  generate_dataset(spec, dir);

  PipelineConfig config;
  config.threads = 2;
  auto results = run_pipeline(dir, {}, OffsetMode::kKnownFromTruth, {}, config);
  REQUIRE(results.size() == 3);

  MetricsReport report = build_metrics(results, dir);
  REQUIRE(!report.rows.empty());
  int ok = 0;
  for (const auto& row : report.rows) {
    if (row.status != "ok") continue;
    ++ok;
    CHECK(row.abs_err <= 0.35);
    // AbsRel * depth_gt = AbsErr by construction.
    CHECK(std::abs(row.abs_rel * row.depth_gt - row.abs_err) <=
          1e-12 * std::max(1.0, row.abs_err));
    CHECK(row.bucket == depth_bucket(row.depth_gt));
  }
  CHECK(ok == 3);

  SUBCASE("reports are byte-deterministic under concurrency") {
    PipelineConfig config4 = config;
    config4.threads = 4;
    auto again = run_pipeline(dir, {}, OffsetMode::kKnownFromTruth, {}, config4);
    MetricsReport report2 = build_metrics(again, dir);
    CHECK(metrics_to_csv(report) == metrics_to_csv(report2));
    CHECK(metrics_to_json(report) == metrics_to_json(report2));
  }

  SUBCASE("scene estimate report carries the event interfaces") {
    auto scenes = list_scene_dirs(dir);
    SceneRunResult one = run_scene(scenes[0], 240, OffsetMode::kKnownFromTruth, {},
                                   config);
    REQUIRE(one.status == "ok");
    REQUIRE(one.collisions.size() == 1);
    const auto& c = one.collisions[0];
    CHECK(c.status == "ok");
    CHECK(c.audio_end_sample > c.audio_start_sample);
    CHECK(c.frame_last > c.frame_first);
    CHECK(c.split_s == c.split_e + 1);
    CHECK(c.onset_sample >= 0);
    CHECK(c.inlier_count > 0);
    std::string json_report = scene_result_to_json(one);
    CHECK(json_report.find("\"onset\"") != std::string::npos);
    CHECK(json_report.find("\"video_event\"") != std::string::npos);
    CHECK(json_report.find("\"pair\"") != std::string::npos);
  }
}

TEST_CASE("per-scene failures are isolated and categorized") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 2;
  auto dir = temp_dir("failure_isolation");
  generate_dataset(spec, dir);

  // Sabotage scene 0: drop the audio so onset search cannot run.
  auto scenes = list_scene_dirs(dir);
  fs::remove(scenes[0] / "audio.wav");

  PipelineConfig config;
  config.threads = 1;
  auto results = run_pipeline(dir, {}, OffsetMode::kKnownFromTruth, {}, config);
  REQUIRE(results.size() == 2);
  CHECK(results[0].status != "ok");
  CHECK(results[1].status == "ok");  // the batch completed

  MetricsReport report = build_metrics(results, dir);
  bool has_failure_row = false;
  for (const auto& row : report.rows) {
    if (row.status != "ok") has_failure_row = true;
  }
  CHECK(has_failure_row);
  CHECK(report.failure_counts.size() >= 1);
}

TEST_CASE("fps filter restricts the evaluated variants") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 1;
  spec.fps_set = {60, 240};
  auto dir = temp_dir("fps_filter");
  generate_dataset(spec, dir);

  PipelineConfig config;
  config.threads = 1;
  auto all = run_pipeline(dir, {}, OffsetMode::kKnownFromTruth, {}, config);
  CHECK(all.size() == 2);
  auto only240 = run_pipeline(dir, {240}, OffsetMode::kKnownFromTruth, {}, config);
  REQUIRE(only240.size() == 1);
  CHECK(only240[0].fps == 240);
}

TEST_CASE("calibration from a labeled dataset recovers the injected offset") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 4;
  spec.t_hw_s = 1.2e-3;
  auto dir = temp_dir("calibrate");
  generate_dataset(spec, dir);

  PipelineConfig config;
  config.threads = 2;
  CalibrationModel model = calibrate_from_dataset(dir, 240, false, config);
  CHECK(std::abs(model.t_hw_s - 1.2e-3) <= 0.3e-3);
  CHECK(model.residual_ms < 1.0);
}

TEST_CASE("off-screen collision fails with a reason, not silently") {
  // Camera aimed away from the bounce: the object is visible early but the
  // impact happens outside the view.
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 1;
  auto dir = temp_dir("offscreen");
  generate_dataset(spec, dir);
  auto scenes = list_scene_dirs(dir);

  SceneConfig cfg = read_scene_config(scenes[0] / "scene_config.json");
  cfg.focal_px = cfg.depth_m * 110.0;
  cfg.camera_center_x = 0.0;
  cfg.camera_center_y = cfg.drop_height_m;  // looks at the drop point, not the floor
  cfg.image_height = 72;
  Trajectory traj = simulate_trajectory(cfg);
  FrameSequence seq = render_frames(traj, cfg);
  // Overwrite the frame variant with the off-screen render.
  const fs::path fps_dir = scenes[0] / "fps_240";
  for (std::size_t n = 0; n < seq.frames.size(); ++n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", static_cast<int>(n));
    write_pgm(seq.frames[n], fps_dir / buf);
  }
  FramesManifest manifest{240, cfg.image_width, cfg.image_height,
                          static_cast<int>(seq.frames.size()), seq.camera};
  write_frames_manifest(manifest, fps_dir / "manifest.json");

  PipelineConfig config;
  config.threads = 1;
  SceneRunResult result = run_scene(scenes[0], 240, OffsetMode::kKnownFromTruth, {},
                                    config);
  bool scene_failed = result.status != "ok";
  bool collision_failed = false;
  for (const auto& c : result.collisions) {
    if (c.status != "ok") collision_failed = true;
  }
  CHECK((scene_failed || collision_failed));
}

TEST_CASE("fps consistency report: ratios, degenerate exclusion, monotonicity") {
  // Hand-built results: scene A at 240/120/30 with known timing offsets.
  auto mk = [](const std::string& id, int fps, double t_video) {
    SceneRunResult r;
    r.scene_id = id;
    r.fps = fps;
    r.status = "ok";
    CollisionResult c;
    c.status = "ok";
    c.t_video = t_video;
    r.collisions.push_back(c);
    return r;
  };
  std::vector<SceneRunResult> results{
      mk("scene_0000", 240, 0.500000), mk("scene_0000", 120, 0.500400),
      mk("scene_0000", 30, 0.502000),  mk("scene_0001", 240, 0.700000),
      mk("scene_0001", 120, 0.700200), mk("scene_0001", 30, 0.701500),
      // Zero-error comparison: excluded as degenerate.
      mk("scene_0002", 240, 0.300000), mk("scene_0002", 30, 0.300000)};

  FpsConsistencyReport report = fps_consistency_report(results);
  CHECK(report.rows.size() == 4);
  CHECK(report.degenerate_count[30] == 1);
  // ratio = frame duration / temporal error, medianed per fps across scenes.
  double r120a = (1.0 / 120) / 0.000400, r120b = (1.0 / 120) / 0.000200;
  CHECK(report.median_ratio.at(120) ==
        doctest::Approx(0.5 * (r120a + r120b)).epsilon(1e-9));
  double r30a = (1.0 / 30) / 0.002000, r30b = (1.0 / 30) / 0.001500;
  CHECK(report.median_ratio.at(30) ==
        doctest::Approx(0.5 * (r30a + r30b)).epsilon(1e-9));
  // Higher frame rates sit closer to the 240 FPS baseline.
  CHECK(report.median_error_s.at(120) <= report.median_error_s.at(30));
}

TEST_CASE("noise sweep settings cycle across generated scenes") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 4;
  spec.fps_set = {30};
  spec.noise_sweep = {NoiseSpec{0.0, 0.0, 0.0}, NoiseSpec{1.5, 30.0, 0.05}};
  auto dir = temp_dir("noise_sweep");
  generate_dataset(spec, dir);
  auto scenes = list_scene_dirs(dir);
  REQUIRE(scenes.size() == 4);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    SceneConfig cfg = read_scene_config(scenes[i] / "scene_config.json");
    if (i % 2 == 0) {
      CHECK(cfg.noise.audio_snr_db == 0.0);
    } else {
      CHECK(cfg.noise.audio_snr_db == doctest::Approx(30.0));
      CHECK(cfg.noise.pixel_noise_sigma == doctest::Approx(1.5));
    }
  }
}

TEST_CASE("pipeline tolerates sensor noise end to end") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 2;
  spec.depth_range_m = {6.0, 14.0};
  spec.noise_sweep = {NoiseSpec{1.5, 30.0, 0.05}};
  auto dir = temp_dir("noisy_pipeline");
  generate_dataset(spec, dir);

  PipelineConfig config;
  config.threads = 2;
  auto results = run_pipeline(dir, {}, OffsetMode::kKnownFromTruth, {}, config);
  MetricsReport report = build_metrics(results, dir);
  int ok = 0;
  for (const auto& row : report.rows) {
    if (row.status != "ok") continue;
    ++ok;
    CHECK(row.abs_err <= 1.0);  // looser than the noiseless budget
  }
  CHECK(ok >= 1);
}

TEST_CASE("a fitted sound speed is applied by the calibrated pipeline") {
  DatasetSpec spec = tiny_spec();
  spec.n_scenes = 1;
  spec.t_hw_s = 1e-3;
  auto dir = temp_dir("v_eff");
  generate_dataset(spec, dir);
  auto scenes = list_scene_dirs(dir);
  SceneTruth truth = load_truth(scenes[0]);

  PipelineConfig config;
  config.threads = 1;
  CalibrationModel with_v;
  with_v.t_hw_s = truth.t_hw_s;
  with_v.v_eff = 330.0;  // scenes were synthesized at 343 m/s
  SceneRunResult r = run_scene(scenes[0], 240, OffsetMode::kCalibrated, with_v,
                               config);
  REQUIRE(r.status == "ok");
  REQUIRE(!r.collisions.empty());
  REQUIRE(r.collisions[0].status == "ok");
  // Depth scales with the sound speed the model carries.
  CHECK(r.collisions[0].depth_est ==
        doctest::Approx(truth.depth_m * 330.0 / 343.0).epsilon(0.02));
}
