#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftb/audio_event.hpp"
#include "ftb/av_correspondence.hpp"
#include "ftb/dataset.hpp"
#include "ftb/depth_core.hpp"
#include "ftb/video_event.hpp"

namespace ftb {

struct PipelineConfig {
  FlowParams flow;  // pyramid depth is adapted per frame rate, see flow_for_fps
  TrackParams track;
  MotionEventParams motion;
  AudioImpactParams audio_impacts;
  OnsetParams onset;
  SplitParams split;
  TrajectoryFitParams fit{3, 15.0, 0.5};  // slope gate tuned for rendered scenes
  PropagationConstants consts;

  double d_max_m = 60.0;          // bounds the acoustic onset search
  double onset_guard_pre_s = 0.004;
  double onset_guard_post_s = 0.040;
  int window_margin_frames = 6;   // full-rate frames kept around the event window
  int threads = 0;                // 0 = hardware concurrency

  // Lower frame rates move further per frame from the anchor; give the
  // pyramid the reach for it.
  FlowParams flow_for_fps(int fps) const {
    FlowParams p = flow;
    if (fps <= 30) {
      p.pyramid_levels = std::max(p.pyramid_levels, 5);
    } else if (fps <= 60) {
      p.pyramid_levels = std::max(p.pyramid_levels, 4);
    }
    return p;
  }
};

// How the hardware offset is supplied to depth recovery.
enum class OffsetMode {
  kZero,             // t_hw = 0 (uncalibrated raw run)
  kKnownFromTruth,   // read each scene's ground-truth t_hw_s
  kCalibrated,       // use a CalibrationModel
};

// Five-number summary of the per-pixel intersection times.
struct IntersectionHistogram {
  int count = 0;
  double min = 0.0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  double max = 0.0;
};

struct CollisionResult {
  int collision_index = 0;
  std::string status;  // "ok" or {no-collision, no-onset, negative-delay, tracking-lost}
  double pairing_score = 0.0;

  // video event
  int split_e = -1;
  int split_s = -1;
  double t_video = 0.0;
  int inlier_count = 0;
  double l1_loss = 0.0;
  IntersectionHistogram intersection_hist;

  // audio event
  std::int64_t onset_sample = -1;
  double t_audio = 0.0;
  double onset_confidence = 0.0;
  bool clip_clipped_start = false;
  bool clip_clipped_end = false;

  // pairing manifest data
  std::int64_t audio_start_sample = 0;
  std::int64_t audio_end_sample = 0;
  int frame_first = 0;
  int frame_last = 0;
  Mask motion_mask;        // target support from the paired motion window
  std::string mask_file;   // set when the mask has been written out

  double T_s = 0.0;
  double depth_est = 0.0;
};

struct SceneRunResult {
  std::string scene_id;
  int fps = 0;
  std::string status;  // "ok" or a scene-level failure reason
  bool overlapping_audio = false;
  int unmatched_audio = 0;
  int unmatched_motion = 0;
  std::vector<CollisionResult> collisions;
};

SceneRunResult run_scene(const std::filesystem::path& scene_dir, int fps,
                         OffsetMode offset_mode, const CalibrationModel& calibration,
                         const PipelineConfig& config);

// Runs every scene directory at every requested fps (empty filter = all
// available). Scenes are processed concurrently; the result order is
// deterministic (sorted by scene id, then fps).
std::vector<SceneRunResult> run_pipeline(const std::filesystem::path& dataset_dir,
                                         const std::vector<int>& fps_filter,
                                         OffsetMode offset_mode,
                                         const CalibrationModel& calibration,
                                         const PipelineConfig& config);

// Collects (t_audio, t_video, depth_gt) triples from a labeled dataset and
// fits the hardware offset (and optionally the effective sound speed).
CalibrationModel calibrate_from_dataset(const std::filesystem::path& dataset_dir,
                                        int fps, bool fit_v,
                                        const PipelineConfig& config);

}  // namespace ftb
