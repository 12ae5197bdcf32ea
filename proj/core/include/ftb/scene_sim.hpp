#pragma once

#include <cstdint>
#include <vector>

#include "ftb/geometry.hpp"
#include "ftb/image.hpp"

namespace ftb {

enum class ImpactModel { kSharpImpulse, kRampedOnset };

struct NoiseSpec {
  double pixel_noise_sigma = 0.0;   // gray levels
  double audio_snr_db = 0.0;        // 0 = noiseless
  double centroid_jitter_px = 0.0;  // pixels
};

// One collision scene. The scene clock equals the video clock: frame n is
// exposed at n/fps. Audio sample k maps to scene time k/sample_rate + t_hw_s,
// i.e. t_hw_s is the audio recorder start offset.
struct SceneConfig {
  double depth_m = 10.0;
  double drop_height_m = 1.0;
  double gravity = 9.8;          // m/s^2
  double restitution = 0.6;      // [0, 1]
  double horizontal_velocity = 0.0;  // m/s
  double object_radius_m = 0.12;
  ImpactModel impact_model = ImpactModel::kSharpImpulse;
  int fps = 240;                 // {30, 60, 120, 240}
  int sample_rate = 48000;
  double t_hw_s = 0.0;
  NoiseSpec noise;
  std::uint64_t rng_seed = 1;

  // Propagation speeds, configurable so the exact form of the delay model is
  // testable end to end.
  double v_sound = 343.0;
  double c_light = 2.998e8;

  // Render geometry. duration_s == 0 picks a span covering the first
  // collision plus its acoustic arrival. focal_px == 0 auto-frames the
  // trajectory; a manual focal length also requires camera_center_*.
  double duration_s = 0.0;
  int image_width = 192;
  int image_height = 144;
  double focal_px = 0.0;
  double camera_center_x = 0.0;  // metres, in the motion plane
  double camera_center_y = 0.0;

  void validate() const;  // throws ConfigError
  double resolved_duration() const;
};

struct TrajectorySample {
  double t;   // seconds, scene clock
  Vec3 pos;   // metres; z is the (constant) depth
  Vec3 vel;   // m/s
};

// Piecewise-ballistic arc between consecutive collisions; allows exact
// closed-form evaluation at arbitrary times.
struct BallisticSegment {
  double t0;
  double t1;
  Vec3 p0;
  Vec3 v0;
  double gravity;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;   // strictly increasing t
  std::vector<double> collision_times;     // ground-truth t_c per bounce
  std::vector<BallisticSegment> segments;

  Vec3 position_at(double t) const;
  Vec3 velocity_at(double t) const;
  double end_time() const { return segments.empty() ? 0.0 : segments.back().t1; }
};

// Pinhole camera looking down +z at the motion plane z = depth_m.
// Image y grows downward.
struct Camera {
  double focal_px = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double center_x_m = 0.0;
  double center_y_m = 0.0;
  double depth_m = 1.0;

  Vec2 project(const Vec3& p) const {
    return {cx + focal_px * (p.x - center_x_m) / p.z,
            cy - focal_px * (p.y - center_y_m) / p.z};
  }
  // Inverse map of a pixel back to plane metres at the camera depth.
  Vec2 backproject(const Vec2& px) const {
    return {center_x_m + (px.x - cx) * depth_m / focal_px,
            center_y_m - (px.y - cy) * depth_m / focal_px};
  }
  double pixels_per_metre() const { return focal_px / depth_m; }
};

struct FrameSequence {
  std::vector<ImageU8> frames;      // 8-bit grayscale
  std::vector<double> timestamps;   // seconds, video clock; frame n at n/fps
  int fps = 0;
  Camera camera;                    // render metadata, used by oracles/debug
};

struct AudioClip {
  std::vector<float> samples;        // normalized float in [-1, 1]
  int sample_rate = 0;
  double clock_offset_s = 0.0;       // audio clock origin in scene time (= t_hw_s)
  bool overlapping_impacts = false;  // impact waveforms overlapped during synthesis
};

// A trajectory placed into a composite scene: shifted in time and sideways in
// the motion plane. Used to build multi-collision scenes from single-object
// simulations.
struct SceneObject {
  Trajectory traj;
  double t_offset_s = 0.0;
  double x_offset_m = 0.0;
  ImpactModel impact_model = ImpactModel::kSharpImpulse;
};

Trajectory simulate_trajectory(const SceneConfig& cfg);

FrameSequence render_frames(const Trajectory& traj, const SceneConfig& cfg);
FrameSequence render_objects(const std::vector<SceneObject>& objects,
                             const SceneConfig& cfg);

AudioClip synthesize_audio(const Trajectory& traj, const SceneConfig& cfg);
AudioClip synthesize_audio_objects(const std::vector<SceneObject>& objects,
                                   const SceneConfig& cfg);

// Ground-truth support of the rendered disc at one frame time (no noise).
Mask object_support_mask(const Trajectory& traj, const SceneConfig& cfg,
                         const Camera& cam, double frame_time,
                         double t_offset_s = 0.0, double x_offset_m = 0.0);

// The camera render_frames would pick for these objects (auto-framing).
Camera resolve_camera(const std::vector<SceneObject>& objects,
                      const SceneConfig& cfg);

// Scene time at which the impact waveform of a collision at t_c starts.
inline double impact_onset_scene_time(double t_c, const SceneConfig& cfg) {
  return t_c + cfg.depth_m / cfg.v_sound;
}

}  // namespace ftb
