#pragma once

#include <cstdint>
#include <vector>

#include "ftb/image.hpp"
#include "ftb/optical_flow.hpp"
#include "ftb/scene_sim.hpp"

namespace ftb {

struct AudioImpactWindow {
  std::int64_t start_sample = 0;
  std::int64_t end_sample = 0;   // exclusive
  std::int64_t peak_sample = 0;
  double peak_energy = 0.0;      // normalized power at the peak
  double onset_t_s = 0.0;        // first threshold crossing, audio-clock seconds
};

struct AudioImpactParams {
  double window_ms = 200.0 / 3.0;   // 66.7 ms impact window
  double hop_ms = 1.0;
  double peak_mult = 6.0;           // threshold: peak_mult * median envelope
  double min_separation_ms = 50.0;
};

std::vector<AudioImpactWindow> detect_audio_impacts(
    const AudioClip& audio, const AudioImpactParams& params = {});

struct MotionEventWindow {
  int first_frame = 0;   // full-rate frame indices
  int last_frame = 0;
  int mask_frame = 0;    // full-rate frame the mask belongs to
  Mask mask;             // target object in the last clean pre-collision frame
  double peak_accel_change = 0.0;  // px/frame^2 at the correspondence rate
};

struct MotionEventParams {
  double target_fps = 30.0;        // correspondence runs on a downsampled stream
  double moving_threshold_px = 0.5;
  int min_component_area = 12;
  double noise_mult = 5.0;
  double min_abs_change = 0.25;    // px per strided frame^2
  double association_gate_px = 25.0;
};

std::vector<MotionEventWindow> detect_motion_events(
    const FrameSequence& frames, const FlowParams& flow_params,
    const MotionEventParams& params = {});

struct AVEventPair {
  AudioImpactWindow audio;
  MotionEventWindow motion;
  double pairing_score = 0.0;  // overlap fraction heuristic, [0, 1]
};

struct PairingResult {
  std::vector<AVEventPair> pairs;
  std::vector<AudioImpactWindow> unmatched_audio;
  std::vector<MotionEventWindow> unmatched_motion;
};

struct PairingParams {
  double tolerance_frames = 1.0;
  // The sound of a collision trails its video frames by up to d_max/v_sound;
  // the pairing interval extends this far past the motion window.
  double max_acoustic_lag_s = 60.0 / 343.0;
};

PairingResult pair_events(const std::vector<AudioImpactWindow>& audio_events,
                          const std::vector<MotionEventWindow>& motion_events,
                          double fps, int sample_rate,
                          const PairingParams& params = {});

}  // namespace ftb
