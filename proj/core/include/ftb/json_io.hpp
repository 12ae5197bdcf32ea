#pragma once

#include <filesystem>
#include <string>

#include "ftb/dataset.hpp"
#include "ftb/depth_core.hpp"
#include "ftb/scene_sim.hpp"

namespace ftb {

// JSON (de)serialization for the on-disk formats. Every document carries a
// format_version field. Implemented over nlohmann::json, kept out of the
// public headers.

SceneConfig read_scene_config(const std::filesystem::path& path);
void write_scene_config(const SceneConfig& cfg, const std::filesystem::path& path);

DatasetSpec read_dataset_spec(const std::filesystem::path& path);
void write_dataset_spec(const DatasetSpec& spec, const std::filesystem::path& path);

CalibrationModel read_calibration(const std::filesystem::path& path);
void write_calibration(const CalibrationModel& model,
                       const std::filesystem::path& path);

SceneTruth read_scene_truth(const std::filesystem::path& path);
void write_scene_truth(const SceneTruth& truth, const std::filesystem::path& path);

struct FramesManifest {
  int fps = 0;
  int width = 0;
  int height = 0;
  int count = 0;
  Camera camera;
};

FramesManifest read_frames_manifest(const std::filesystem::path& path);
void write_frames_manifest(const FramesManifest& manifest,
                           const std::filesystem::path& path);

}  // namespace ftb
