#include "ftb/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ftb/error.hpp"

namespace ftb {

namespace fs = std::filesystem;

namespace {

// Sub-sequence view materialized as a FrameSequence with absolute timestamps.
FrameSequence slice_frames(const FrameSequence& seq, int first, int last) {
  FrameSequence out;
  out.fps = seq.fps;
  out.camera = seq.camera;
  for (int i = first; i <= last; ++i) {
    out.frames.push_back(seq.frames[i]);
    out.timestamps.push_back(seq.timestamps[i]);
  }
  return out;
}

FrameSequence reverse_frames(const FrameSequence& seq) {
  FrameSequence out;
  out.fps = seq.fps;
  out.camera = seq.camera;
  for (int i = static_cast<int>(seq.frames.size()) - 1; i >= 0; --i) {
    out.frames.push_back(seq.frames[i]);
    out.timestamps.push_back(seq.timestamps[i]);
  }
  return out;
}

// Tracks outward from the mask frame in both directions and merges into one
// track over [w0, w1], with frame indices absolute in `seq`.
CentroidTrack track_window(const FrameSequence& seq, int w0, int w1, int mask_frame,
                           const Mask& mask, const FlowParams& flow_params,
                           const TrackParams& track_params) {
  std::vector<CentroidTrack::Point> points;
  std::vector<Mask> masks;

  if (mask_frame > w0) {
    FrameSequence back = reverse_frames(slice_frames(seq, w0, mask_frame));
    CentroidTrack tr = track_centroid(back, mask, flow_params, track_params);
    // Reversed order: tr.points[i] belongs to frame mask_frame - i.
    for (int i = static_cast<int>(tr.size()) - 1; i >= 1; --i) {
      points.push_back({mask_frame - i, tr.points[i].t, tr.points[i].x,
                        tr.points[i].y});
      masks.push_back(tr.masks[i]);
    }
  }
  {
    FrameSequence fwd = slice_frames(seq, mask_frame, w1);
    CentroidTrack tr = track_centroid(fwd, mask, flow_params, track_params);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      points.push_back({mask_frame + static_cast<int>(i), tr.points[i].t,
                        tr.points[i].x, tr.points[i].y});
      masks.push_back(tr.masks[i]);
    }
  }
  return CentroidTrack::from_points(std::move(points), std::move(masks));
}

CollisionResult process_pair(const FrameSequence& frames, const AudioClip& audio,
                             const AVEventPair& pair, const CalibrationModel& model,
                             const PipelineConfig& config, int fps) {
  CollisionResult res;
  res.pairing_score = pair.pairing_score;
  res.audio_start_sample = pair.audio.start_sample;
  res.audio_end_sample = pair.audio.end_sample;
  res.frame_first = pair.motion.first_frame;
  res.frame_last = pair.motion.last_frame;
  res.motion_mask = pair.motion.mask;

  const FlowParams flow_params = config.flow_for_fps(fps);
  const int n = static_cast<int>(frames.frames.size());
  const int margin = config.split.k + config.window_margin_frames;
  const int w0 = std::max(0, pair.motion.first_frame - margin);
  const int w1 = std::min(n - 1, pair.motion.last_frame + margin);

  try {
    CentroidTrack track = track_window(frames, w0, w1, pair.motion.mask_frame,
                                       pair.motion.mask, flow_params, config.track);
    CollisionSplit split = coarse_split(track, config.split);
    // Track frame indices are absolute already (track_window), but
    // coarse_split copies them from the track points, so nothing to remap.
    res.split_e = split.e;
    res.split_s = split.s;

    // Anchor flows from I_e to the fit frames, restricted to the tracked mask.
    int e_pos = -1;
    for (std::size_t i = 0; i < track.size(); ++i) {
      if (track.points[i].frame_idx == split.e) e_pos = static_cast<int>(i);
    }
    if (e_pos < 0) throw EstimationError("split anchor left the track");
    const Mask& anchor_mask = track.masks[e_pos];

    std::vector<int> fit_frames;
    fit_frames.insert(fit_frames.end(), split.pre_set.begin(), split.pre_set.end());
    fit_frames.insert(fit_frames.end(), split.post_set.begin(), split.post_set.end());

    // The tracked centroids seed each anchor flow with the expected motion;
    // at low frame rates the displacement outruns the pyramid alone.
    std::vector<Vec2> hints;
    auto track_point = [&](int frame) -> Vec2 {
      for (const auto& p : track.points) {
        if (p.frame_idx == frame) return {p.x, p.y};
      }
      return {track.points.back().x, track.points.back().y};
    };
    Vec2 anchor_c = track_point(split.e);
    for (int f : fit_frames) {
      hints.push_back(track_point(f) - anchor_c);
    }

    auto flows = compute_anchor_flows(frames, split.e, anchor_mask, flow_params,
                                      fit_frames, hints);
    auto fits = fit_pixel_trajectories(flows, fit_frames, anchor_mask, split,
                                       frames.timestamps, config.fit);
    CollisionTimeEstimate est = estimate_collision_time(fits);
    res.t_video = est.t_video;
    res.inlier_count = est.inlier_count;
    res.l1_loss = est.loss;
    {
      std::vector<double> times = est.per_pixel_times;
      std::sort(times.begin(), times.end());
      auto q = [&](double f) {
        return times[static_cast<std::size_t>(f * (times.size() - 1))];
      };
      res.intersection_hist = {static_cast<int>(times.size()), times.front(),
                               q(0.25), q(0.5), q(0.75), times.back()};
    }

    // Onset search: bounded below by the video event, above by the longest
    // plausible acoustic lag, and intersected with the paired audio window.
    const int fs = audio.sample_rate;
    double lag_max = config.d_max_m / config.consts.v_sound;
    std::int64_t s0 = static_cast<std::int64_t>(
        std::floor((est.t_video - config.onset_guard_pre_s) * fs));
    std::int64_t s1 = static_cast<std::int64_t>(
        std::ceil((est.t_video + lag_max + config.onset_guard_post_s) * fs));
    s0 = std::max(s0, pair.audio.start_sample - 2 * fs / 1000);
    s1 = std::min(s1, pair.audio.end_sample + 2 * fs / 1000);

    AudioOnset onset = locate_onset(audio, s0, s1, config.onset);
    res.onset_sample = onset.onset_sample;
    res.t_audio = onset.t_audio;
    res.onset_confidence = onset.confidence;

    HighlightedClip clip = build_highlighted_clip(audio, est.t_video);
    res.clip_clipped_start = clip.clipped_start;
    res.clip_clipped_end = clip.clipped_end;

    DepthEstimate depth = estimate_depth(onset.t_audio, est.t_video, model,
                                         config.consts);
    res.T_s = depth.T_s;
    res.depth_est = depth.depth_m;
    res.status = "ok";
  } catch (const TrackingError&) {
    res.status = "tracking-lost";
  } catch (const NoCollisionError&) {
    res.status = "no-collision";
  } catch (const NoOnsetError&) {
    res.status = "no-onset";
  } catch (const NegativeDelayError&) {
    res.status = "negative-delay";
  } catch (const Error& e) {
    res.status = std::string("error: ") + e.what();
  }
  return res;
}

}  // namespace

SceneRunResult run_scene(const fs::path& scene_dir, int fps, OffsetMode offset_mode,
                         const CalibrationModel& calibration,
                         const PipelineConfig& config) {
  SceneRunResult result;
  result.scene_id = scene_dir.filename().string();
  result.fps = fps;

  CalibrationModel model;  // kZero: t_hw = 0, no fitted sound speed
  try {
    switch (offset_mode) {
      case OffsetMode::kZero:
        break;
      case OffsetMode::kKnownFromTruth:
        model.t_hw_s = load_truth(scene_dir).t_hw_s;
        break;
      case OffsetMode::kCalibrated:
        model = calibration;  // keeps v_eff when it was fitted
        break;
    }

    FrameSequence frames = load_frames(scene_dir, fps);
    AudioClip audio = load_audio(scene_dir);

    auto audio_events = detect_audio_impacts(audio, config.audio_impacts);
    auto motion_events =
        detect_motion_events(frames, config.flow_for_fps(fps), config.motion);
    PairingParams pairing;
    pairing.max_acoustic_lag_s = config.d_max_m / config.consts.v_sound;
    auto paired = pair_events(audio_events, motion_events, fps, audio.sample_rate,
                              pairing);
    result.overlapping_audio = audio.overlapping_impacts;
    result.unmatched_audio = static_cast<int>(paired.unmatched_audio.size());
    result.unmatched_motion = static_cast<int>(paired.unmatched_motion.size());

    if (paired.pairs.empty()) {
      result.status = motion_events.empty() ? "no-collision" : "no-onset";
      return result;
    }
    int idx = 0;
    for (const auto& pair : paired.pairs) {
      CollisionResult cr = process_pair(frames, audio, pair, model, config, fps);
      cr.collision_index = idx++;
      result.collisions.push_back(std::move(cr));
    }
    result.status = "ok";
  } catch (const TrackingError&) {
    result.status = "tracking-lost";
  } catch (const NoCollisionError&) {
    result.status = "no-collision";
  } catch (const NoOnsetError&) {
    result.status = "no-onset";
  } catch (const Error& e) {
    result.status = std::string("error: ") + e.what();
  }
  return result;
}

std::vector<SceneRunResult> run_pipeline(const fs::path& dataset_dir,
                                         const std::vector<int>& fps_filter,
                                         OffsetMode offset_mode,
                                         const CalibrationModel& calibration,
                                         const PipelineConfig& config) {
  auto scene_dirs = list_scene_dirs(dataset_dir);
  if (scene_dirs.empty()) {
    throw IoError("no scene directories under " + dataset_dir.string());
  }

  struct Job {
    fs::path dir;
    int fps;
  };
  std::vector<Job> jobs;
  for (const auto& dir : scene_dirs) {
    for (int fps : available_fps(dir)) {
      if (!fps_filter.empty() &&
          std::find(fps_filter.begin(), fps_filter.end(), fps) == fps_filter.end()) {
        continue;
      }
      jobs.push_back({dir, fps});
    }
  }

  std::vector<SceneRunResult> results(jobs.size());
  const unsigned n_threads =
      config.threads > 0
          ? static_cast<unsigned>(config.threads)
          : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      results[i] =
          run_scene(jobs[i].dir, jobs[i].fps, offset_mode, calibration, config);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads && t < jobs.size(); ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) t.join();
  return results;
}

CalibrationModel calibrate_from_dataset(const fs::path& dataset_dir, int fps,
                                        bool fit_v, const PipelineConfig& config) {
  auto results = run_pipeline(dataset_dir, {fps}, OffsetMode::kZero, {}, config);
  std::vector<CalibrationSample> samples;
  for (const auto& r : results) {
    if (r.status != "ok") continue;
    SceneTruth truth = load_truth(dataset_dir / r.scene_id);
    std::size_t n = std::min(r.collisions.size(), truth.collisions.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = r.collisions[i];
      if (c.status != "ok") continue;
      samples.push_back({c.t_audio, c.t_video, truth.collisions[i].depth_m});
    }
  }
  return calibrate(samples, fit_v, config.consts);
}

}  // namespace ftb
