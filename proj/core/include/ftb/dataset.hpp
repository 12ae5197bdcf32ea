#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "ftb/scene_sim.hpp"

namespace ftb {

struct DatasetSpec {
  int n_scenes = 100;
  std::pair<double, double> depth_range_m{2.0, 50.0};
  std::vector<int> fps_set{30, 60, 120, 240};
  double sharp_fraction = 0.7;  // impact model mix; ramped gets the rest
  std::vector<NoiseSpec> noise_sweep{NoiseSpec{}};  // cycled across scenes
  double multi_collision_fraction = 0.0;
  std::uint64_t seed = 1;
  // Recorder start offset shared by the session, plus optional per-scene jitter.
  double t_hw_s = 0.001;
  double t_hw_jitter_s = 0.0;

  void validate() const;
};

struct CollisionTruth {
  double t_c_s = 0.0;             // collision time, scene clock
  std::int64_t onset_sample = 0;  // audio-clock sample of the impact onset
  double depth_m = 0.0;
};

struct SceneTruth {
  double depth_m = 0.0;
  std::vector<double> collision_times_s;
  std::vector<std::int64_t> onset_samples;
  double t_hw_s = 0.0;
  bool overlapping_impacts = false;
  std::vector<CollisionTruth> collisions;
};

// Writes scene_%04d/ directories, each holding scene_config.json,
// ground_truth.json, audio.wav and one fps_%03d/ frame directory per entry of
// fps_set. Regenerating with the same spec yields a byte-identical tree.
void generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> list_scene_dirs(
    const std::filesystem::path& dataset_dir);

FrameSequence load_frames(const std::filesystem::path& scene_dir, int fps);
AudioClip load_audio(const std::filesystem::path& scene_dir);
SceneTruth load_truth(const std::filesystem::path& scene_dir);
std::vector<int> available_fps(const std::filesystem::path& scene_dir);

}  // namespace ftb
