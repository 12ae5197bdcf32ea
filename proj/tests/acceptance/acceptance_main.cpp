// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Returns the number of failed criteria.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ftb/audio_event.hpp"
#include "ftb/av_correspondence.hpp"
#include "ftb/dataset.hpp"
#include "ftb/depth_core.hpp"
#include "ftb/error.hpp"
#include "ftb/json_io.hpp"
#include "ftb/metrics.hpp"
#include "ftb/optical_flow.hpp"
#include "ftb/pipeline.hpp"
#include "ftb/rng.hpp"
#include "ftb/scene_sim.hpp"
#include "ftb/video_event.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ftb;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 5: intersection exactness on analytic piecewise-linear data.

void criterion_5() {
  Mask mask(8, 8, 0);
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) mask.at(x, y) = 1;
  }
  double worst = 0.0;
  for (double alpha : {0.05, 0.17, 0.33, 0.5, 0.71, 0.94}) {
    const double fps = 240.0;
    const double t_c = (20.0 + alpha) / fps;
    CollisionSplit split;
    split.e = 20;
    split.s = 21;
    split.pre_set = {18, 19, 20};
    split.post_set = {21, 22, 23};
    std::vector<double> timestamps;
    for (int i = 0; i < 40; ++i) timestamps.push_back(i / fps);
    std::vector<int> flow_frames = {18, 19, 20, 21, 22, 23};
    std::vector<double> times;
    for (int i : flow_frames) times.push_back(timestamps[i]);
    testing::AnalyticMotion motion{t_c, {120.0, -900.0}, {120.0, 684.0}};
    auto flows =
        testing::analytic_anchor_flows(motion, mask, timestamps[split.e], times);
    auto fits =
        fit_pixel_trajectories(flows, flow_frames, mask, split, timestamps, {});
    CollisionTimeEstimate est = estimate_collision_time(fits);
    worst = std::max(worst, std::abs(est.t_video - t_c));
  }
  report(5, "intersection exactness on piecewise-linear data", worst <= 1e-9,
         fmt("max |t_video - t_c| = %.3g s", worst));
}

// ---------------------------------------------------------------------------
// Criterion 6: median equals the dense-grid L1 minimizer on 1000 multisets.

void criterion_6() {
  Rng rng(600600);
  int bad = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_index(20));
    std::vector<double> values;
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(0.0, 0.02));
    double med = l1_median(values);
    double scanned = testing::scan_l1_minimizer(values, 1e-6);
    double gap = testing::l1_loss(values, med) - testing::l1_loss(values, scanned);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-12) ++bad;
  }
  report(6, "L1-minimizer oracle (1 us grid, 1000 multisets)", bad == 0,
         fmt("worst loss excess = %.3g", worst_gap));
}

// ---------------------------------------------------------------------------
// Criterion 8: optical flow endpoint error on 1 px translations.

void criterion_8() {
  ImageU8 a = testing::textured_pattern(128, 96, 88);
  bool pass = true;
  double worst = 0.0;
  for (auto [dx, dy] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {-1, 0},
                                                        {0, -1}}) {
    ImageU8 b = testing::shift_image(a, dx, dy);
    FlowField flow = compute_flow(a, b, {});
    double acc = 0.0;
    int n = 0;
    for (int y = 20; y < 76; ++y) {
      for (int x = 20; x < 108; ++x) {
        if (!flow.valid.at(x, y)) continue;
        acc += std::hypot(flow.du.at(x, y) - dx, flow.dv.at(x, y) - dy);
        ++n;
      }
    }
    double epe = n > 0 ? acc / n : 1e9;
    worst = std::max(worst, epe);
    if (epe > 0.2) pass = false;
  }
  // Zero flow on identical frames.
  FlowField self = compute_flow(a, a, {});
  for (int y = 0; y < self.du.height() && pass; ++y) {
    for (int x = 0; x < self.du.width(); ++x) {
      if (self.valid.at(x, y) && (self.du.at(x, y) != 0.0f || self.dv.at(x, y) != 0.0f)) {
        pass = false;
        break;
      }
    }
  }
  report(8, "optical flow: <= 0.2 px EPE on unit shifts, zero on identity", pass,
         fmt("worst EPE = %.3f px", worst));
}

// ---------------------------------------------------------------------------
// Criterion 9: onset recovery, sharp exact; ramped bias within 3 ms and
// absorbed by calibration to <= 0.5 ms residual.

struct OnsetScene {
  AudioClip clip;
  std::int64_t gt_onset;
  double t_c;
  double depth;
  double t_video;  // ground-truth video event time (collision + light delay)
};

OnsetScene make_onset_scene(ImpactModel model, double snr_db, double depth,
                            std::uint64_t seed) {
  SceneConfig cfg;
  cfg.depth_m = depth;
  cfg.drop_height_m = 1.0 + 0.4 * (seed % 3);
  cfg.restitution = 0.0;
  cfg.impact_model = model;
  cfg.noise.audio_snr_db = snr_db;
  cfg.t_hw_s = 1e-3;
  cfg.rng_seed = seed;
  OnsetScene s;
  Trajectory traj = simulate_trajectory(cfg);
  s.t_c = traj.collision_times.at(0);
  s.clip = synthesize_audio(traj, cfg);
  s.clip.clock_offset_s = 0.0;  // estimation-side view of the recording
  s.depth = depth;
  s.gt_onset = static_cast<std::int64_t>(std::lround(
      (s.t_c + depth / cfg.v_sound - cfg.t_hw_s) * cfg.sample_rate));
  s.t_video = s.t_c + depth / cfg.c_light;
  return s;
}

void criterion_9() {
  const int fs = 48000;
  bool sharp_exact = true;
  for (int i = 0; i < 20; ++i) {
    double depth = 2.0 + 48.0 * i / 19.0;
    OnsetScene s = make_onset_scene(ImpactModel::kSharpImpulse, 0.0, depth,
                                    900 + i);
    AudioOnset onset = locate_onset(s.clip, s.gt_onset - 3000, s.gt_onset + 6000);
    if (onset.onset_sample != s.gt_onset) sharp_exact = false;
  }

  double worst_pre_ms = 0.0;
  bool ramped_bounded = true;
  std::vector<CalibrationSample> samples;
  PropagationConstants consts;
  for (int i = 0; i < 40; ++i) {
    double depth = 2.0 + 48.0 * i / 39.0;
    OnsetScene s = make_onset_scene(ImpactModel::kRampedOnset, 35.0, depth,
                                    1900 + i);
    AudioOnset onset = locate_onset(s.clip, s.gt_onset - 3000, s.gt_onset + 6000);
    double err_ms = (onset.onset_sample - s.gt_onset) * 1000.0 / fs;
    worst_pre_ms = std::max(worst_pre_ms, std::abs(err_ms));
    if (err_ms < -0.5 || err_ms > 3.0) ramped_bounded = false;
    samples.push_back({onset.t_audio, s.t_video, s.depth});
  }
  CalibrationModel model = calibrate(samples, false, consts);

  bool pass = sharp_exact && ramped_bounded && model.residual_ms <= 0.5;
  report(9, "onset: sharp exact, ramped <= 3 ms then <= 0.5 ms after calibration",
         pass,
         fmt("sharp exact = %d, ramped worst = %.2f ms, residual = %.3f ms",
             sharp_exact ? 1 : 0, worst_pre_ms, model.residual_ms));
}

// ---------------------------------------------------------------------------
// Criterion 10: calibration recovery, noiseless and under timing noise.

void criterion_10() {
  PropagationConstants consts{343.0, 2.998e8};
  auto make = [&](int n, double t_hw, double sigma, Rng* rng) {
    std::vector<CalibrationSample> samples;
    for (int i = 0; i < n; ++i) {
      double d = 2.0 + 48.0 * i / std::max(1, n - 1);
      double tau = d * (1.0 / consts.v_sound - 1.0 / consts.c_light) - t_hw;
      if (rng) tau += sigma * rng->gaussian();
      samples.push_back({0.5 + tau, 0.5, d});
    }
    return samples;
  };

  CalibrationModel noiseless = calibrate(make(10, 1e-3, 0.0, nullptr), false, consts);
  bool exact = std::abs(noiseless.t_hw_s - 1e-3) <= 1e-9;

  Rng rng(101010);
  int good = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    CalibrationModel m = calibrate(make(50, 1e-3, 0.2e-3, &rng), false, consts);
    if (std::abs(m.t_hw_s - 1e-3) <= 0.1e-3) ++good;
  }
  bool pass = exact && good >= 950;
  report(10, "calibration: exact noiseless, <= 0.1 ms in >= 95% noisy trials", pass,
         fmt("noiseless err = %.2g s, good trials = %d/1000",
             std::abs(noiseless.t_hw_s - 1e-3), good));
}

// ---------------------------------------------------------------------------
// Criterion 12: exact-vs-approximate gap equals v/c.

void criterion_12() {
  PropagationConstants consts{343.0, 2.998e8};
  const double vc = consts.v_sound / consts.c_light;
  double worst = 0.0;
  for (double T = 1e-3; T <= 0.2 + 1e-12; T += 0.5e-3) {
    double exact = depth_from_delay(T, consts);
    double approx = depth_from_delay_approx(T, consts);
    double gap = (exact - approx) / exact;
    worst = std::max(worst, std::abs(gap - vc));
  }
  report(12, "closed-form vs approximate gap equals v/c", worst <= 1e-12,
         fmt("max |gap - v/c| = %.3g", worst));
}

// ---------------------------------------------------------------------------
// Criterion 7: coarse split vs the exhaustive two-segment oracle.

CentroidTrack rendered_window_track(const fs::path& scene_dir, int fps) {
  SceneConfig cfg = read_scene_config(scene_dir / "scene_config.json");
  cfg.fps = fps;
  Trajectory traj = simulate_trajectory(cfg);
  FrameSequence seq = load_frames(scene_dir, fps);
  double t_c = traj.collision_times.at(0);
  int c_frame = static_cast<int>(t_c * fps);
  int pre = fps >= 240 ? 10 : 6;
  int w0 = std::max(0, c_frame - pre);
  int w1 = std::min<int>(static_cast<int>(seq.frames.size()) - 1, c_frame + pre);
  FrameSequence window;
  window.fps = seq.fps;
  window.camera = seq.camera;
  for (int i = w0; i <= w1; ++i) {
    window.frames.push_back(seq.frames[i]);
    window.timestamps.push_back(seq.timestamps[i]);
  }
  Mask mask = object_support_mask(traj, cfg, seq.camera, seq.timestamps[w0]);
  return track_centroid(window, mask, {});
}

void criterion_7(const fs::path& dataset_dir) {
  int checked = 0, agree = 0;

  // Analytic tracks over a dense grid of sub-frame phases.
  for (int pi = 1; pi <= 19; ++pi) {
    double alpha = pi / 20.0;
    CentroidTrack track = testing::analytic_bounce_track(
        40, 240.0, (20.0 + alpha) / 240.0, 0.5, 14.0, -9.5, 0.02);
    CollisionSplit split = coarse_split(track);
    int oracle = testing::two_segment_split_oracle(track);
    ++checked;
    if (split.e == track.points[oracle].frame_idx) ++agree;
  }

  // Rendered tracks from the synthetic suite.
  auto scenes = list_scene_dirs(dataset_dir);
  for (std::size_t i = 0; i < scenes.size() && i < 10; ++i) {
    for (int fps : {240, 30}) {
      try {
        CentroidTrack track = rendered_window_track(scenes[i], fps);
        CollisionSplit split = coarse_split(track);
        int oracle = testing::two_segment_split_oracle(track);
        ++checked;
        if (split.e == track.points[oracle].frame_idx) ++agree;
      } catch (const Error&) {
        ++checked;  // a failure to split counts against agreement
      }
    }
  }
  report(7, "coarse split agrees with the two-segment least-squares oracle",
         checked == agree, fmt("%d/%d tracks agree", agree, checked));
}

// ---------------------------------------------------------------------------
// Criteria 1-4: the synthetic closed-loop suite.

void criteria_1_to_4(const fs::path& work) {
  const fs::path dataset = work / "suite";
  DatasetSpec spec;
  spec.n_scenes = 100;
  spec.depth_range_m = {2.0, 50.0};
  spec.fps_set = {30, 60, 120, 240};
  spec.sharp_fraction = 0.7;
  spec.multi_collision_fraction = 0.0;
  spec.seed = 20240809;
  spec.t_hw_s = 1e-3;

  auto t0 = Clock::now();
  generate_dataset(spec, dataset);
  double gen_s = seconds_since(t0);

  PipelineConfig config;
  auto t1 = Clock::now();
  auto results = run_pipeline(dataset, {}, OffsetMode::kKnownFromTruth, {}, config);
  double eval_s = seconds_since(t1);

  MetricsReport report_data = build_metrics(results, dataset);

  // Criterion 1: closed-loop accuracy and runtime.
  {
    auto it = report_data.abs_err_by_fps.find(240);
    double median = it != report_data.abs_err_by_fps.end() ? it->second.median : 1e9;
    int count = it != report_data.abs_err_by_fps.end() ? it->second.count : 0;
    bool pass = median <= 0.35 && count >= 90 && (gen_s + eval_s) <= 600.0;
    report(1, "closed-loop: median AbsErr <= 0.35 m at 240 FPS within 10 min", pass,
           fmt("median = %.3f m over %d/100 scenes, gen %.0f s + eval %.0f s",
               median, count, gen_s, eval_s));
  }

  // Criterion 2: the frame-rate trend.
  {
    std::map<int, double> med;
    for (const auto& [fps, agg] : report_data.abs_err_by_fps) med[fps] = agg.median;
    bool have = med.count(30) && med.count(60) && med.count(120) && med.count(240);
    bool pass = have && med[30] > med[240] && med[30] >= med[60] &&
                med[60] >= med[120] && med[120] >= med[240];
    report(2, "median AbsErr non-increasing in frame rate, 30 > 240", pass,
           have ? fmt("30:%.3f 60:%.3f 120:%.3f 240:%.3f m", med[30], med[60],
                      med[120], med[240])
                : std::string("missing fps aggregate"));
  }

  // Criterion 3: the distance trend in relative error.
  {
    auto far = report_data.abs_rel_by_bucket.find(">30");
    auto near = report_data.abs_rel_by_bucket.find("<10");
    bool have = far != report_data.abs_rel_by_bucket.end() &&
                near != report_data.abs_rel_by_bucket.end();
    bool pass = have && far->second.median < near->second.median;
    report(3, "median AbsRel smaller beyond 30 m than under 10 m", pass,
           have ? fmt(">30m: %.2f%%, <10m: %.2f%%", far->second.median * 100,
                      near->second.median * 100)
                : std::string("missing bucket aggregate"));
  }

  // Criterion 4: the improvement-ratio micro-benchmark, with the temporal
  // error shrinking as the frame rate grows.
  {
    FpsConsistencyReport fps_report = fps_consistency_report(results);
    auto it = fps_report.median_ratio.find(30);
    bool have = it != fps_report.median_ratio.end() &&
                fps_report.median_error_s.count(120);
    bool pass = have && it->second > 5.0 &&
                fps_report.median_error_s.at(120) <= fps_report.median_error_s.at(30);
    report(4, "median improvement ratio at 30 FPS exceeds 5", pass,
           have ? fmt("ratio = %.1f, temporal error 30: %.2f ms, 120: %.2f ms",
                      it->second, fps_report.median_error_s.at(30) * 1e3,
                      fps_report.median_error_s.at(120) * 1e3)
                : std::string("no 30 FPS comparisons"));
  }

  criterion_7(dataset);
}

// ---------------------------------------------------------------------------
// Criterion 11: correspondence precision/recall and overlap flagging.

void criterion_11(const fs::path& work) {
  const fs::path dataset = work / "multi";
  DatasetSpec spec;
  spec.n_scenes = 12;
  spec.depth_range_m = {4.0, 30.0};
  spec.fps_set = {240};
  spec.sharp_fraction = 0.5;
  spec.multi_collision_fraction = 1.0;
  spec.seed = 1111;
  spec.t_hw_s = 1e-3;
  generate_dataset(spec, dataset);

  PipelineConfig config;
  int expected = 0, found = 0, correct = 0;
  bool any_unmatched_extra = false;
  for (const auto& scene : list_scene_dirs(dataset)) {
    SceneTruth truth = load_truth(scene);
    FrameSequence frames = load_frames(scene, 240);
    AudioClip audio = load_audio(scene);
    auto audio_events = detect_audio_impacts(audio, config.audio_impacts);
    auto motion_events = detect_motion_events(frames, config.flow_for_fps(240),
                                              config.motion);
    PairingParams pairing;
    pairing.max_acoustic_lag_s = config.d_max_m / config.consts.v_sound;
    auto paired = pair_events(audio_events, motion_events, 240, audio.sample_rate,
                              pairing);

    expected += static_cast<int>(truth.collisions.size());
    found += static_cast<int>(paired.pairs.size());
    if (!paired.unmatched_audio.empty() || !paired.unmatched_motion.empty()) {
      any_unmatched_extra = true;
    }
    // Pairs and ground truth are both time sorted; check containment.
    for (std::size_t i = 0;
         i < paired.pairs.size() && i < truth.collisions.size(); ++i) {
      const auto& pair = paired.pairs[i];
      const auto& gt = truth.collisions[i];
      bool motion_ok = pair.motion.first_frame <= gt.t_c_s * 240.0 &&
                       pair.motion.last_frame >= gt.t_c_s * 240.0;
      bool audio_ok = pair.audio.start_sample <= gt.onset_sample &&
                      pair.audio.end_sample > gt.onset_sample;
      if (motion_ok && audio_ok) ++correct;
    }
  }
  bool precision_recall = expected == found && found == correct &&
                          !any_unmatched_extra;

  // Overlapping impact sounds must be flagged, never silently processed.
  SceneConfig cfg;
  cfg.depth_m = 10.0;
  cfg.duration_s = 1.0;
  cfg.rng_seed = 3030;
  Trajectory a, b;
  a.segments.push_back({0.0, 1.0, {0, 0, 10}, {0, 0, 0}, 0.0});
  a.collision_times.push_back(0.40);
  b.segments.push_back({0.0, 1.0, {0.6, 0, 10}, {0, 0, 0}, 0.0});
  b.collision_times.push_back(0.412);
  AudioClip overlap = synthesize_audio_objects(
      {{a, 0.0, 0.0, ImpactModel::kSharpImpulse},
       {b, 0.0, 0.0, ImpactModel::kSharpImpulse}},
      cfg);
  bool flagged = overlap.overlapping_impacts;

  report(11, "correspondence: precision = recall = 1, overlaps flagged",
         precision_recall && flagged,
         fmt("%d gt, %d paired, %d correct, overlap flag = %d", expected, found,
             correct, flagged ? 1 : 0));
}

}  // namespace

int main() {
  const fs::path work =
      fs::temp_directory_path() / ("ftb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  auto t0 = Clock::now();
  criterion_5();
  criterion_6();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_12();
  criterion_11(work);
  criteria_1_to_4(work);

  std::printf("acceptance finished in %.0f s: %s\n", seconds_since(t0),
              g_failures == 0 ? "all criteria passed"
                              : fmt("%d criteria FAILED", g_failures).c_str());
  fs::remove_all(work);
  return g_failures;
}
