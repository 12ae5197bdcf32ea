#include "ftb/json_io.hpp"

#include <cmath>
#include <fstream>

#include "ftb/error.hpp"
#include "ftb/optical_flow.hpp"
#include "json.hpp"

namespace ftb {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json load_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw IoError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const json& j, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
  if (!f) throw IoError("short write: " + path.string());
}

std::string impact_model_name(ImpactModel m) {
  return m == ImpactModel::kSharpImpulse ? "sharp_impulse" : "ramped_onset";
}

ImpactModel impact_model_from(const std::string& s) {
  if (s == "sharp_impulse") return ImpactModel::kSharpImpulse;
  if (s == "ramped_onset") return ImpactModel::kRampedOnset;
  throw ConfigError("unknown impact_model: " + s);
}

json noise_to_json(const NoiseSpec& n) {
  return json{{"pixel_noise_sigma", n.pixel_noise_sigma},
              {"audio_snr_db", n.audio_snr_db},
              {"centroid_jitter_px", n.centroid_jitter_px}};
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  n.pixel_noise_sigma = j.value("pixel_noise_sigma", 0.0);
  n.audio_snr_db = j.value("audio_snr_db", 0.0);
  n.centroid_jitter_px = j.value("centroid_jitter_px", 0.0);
  return n;
}

json camera_to_json(const Camera& c) {
  return json{{"focal_px", c.focal_px},   {"cx", c.cx},
              {"cy", c.cy},               {"center_x_m", c.center_x_m},
              {"center_y_m", c.center_y_m}, {"depth_m", c.depth_m}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.focal_px = j.value("focal_px", 0.0);
  c.cx = j.value("cx", 0.0);
  c.cy = j.value("cy", 0.0);
  c.center_x_m = j.value("center_x_m", 0.0);
  c.center_y_m = j.value("center_y_m", 0.0);
  c.depth_m = j.value("depth_m", 1.0);
  return c;
}

}  // namespace

SceneConfig read_scene_config(const std::filesystem::path& path) {
  json j = load_json(path);
  SceneConfig cfg;
  cfg.depth_m = j.value("depth_m", cfg.depth_m);
  cfg.drop_height_m = j.value("drop_height_m", cfg.drop_height_m);
  cfg.gravity = j.value("gravity", cfg.gravity);
  cfg.restitution = j.value("restitution", cfg.restitution);
  cfg.horizontal_velocity = j.value("horizontal_velocity", cfg.horizontal_velocity);
  cfg.object_radius_m = j.value("object_radius_m", cfg.object_radius_m);
  if (j.contains("impact_model")) {
    cfg.impact_model = impact_model_from(j["impact_model"].get<std::string>());
  }
  cfg.fps = j.value("fps", cfg.fps);
  cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
  cfg.t_hw_s = j.value("t_hw_s", cfg.t_hw_s);
  if (j.contains("noise")) cfg.noise = noise_from_json(j["noise"]);
  cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
  cfg.v_sound = j.value("v_sound", cfg.v_sound);
  cfg.c_light = j.value("c_light", cfg.c_light);
  cfg.duration_s = j.value("duration_s", cfg.duration_s);
  cfg.image_width = j.value("image_width", cfg.image_width);
  cfg.image_height = j.value("image_height", cfg.image_height);
  cfg.focal_px = j.value("focal_px", cfg.focal_px);
  cfg.camera_center_x = j.value("camera_center_x", cfg.camera_center_x);
  cfg.camera_center_y = j.value("camera_center_y", cfg.camera_center_y);
  cfg.validate();
  return cfg;
}

void write_scene_config(const SceneConfig& cfg, const std::filesystem::path& path) {
  json j{{"format_version", kFormatVersion},
         {"depth_m", cfg.depth_m},
         {"drop_height_m", cfg.drop_height_m},
         {"gravity", cfg.gravity},
         {"restitution", cfg.restitution},
         {"horizontal_velocity", cfg.horizontal_velocity},
         {"object_radius_m", cfg.object_radius_m},
         {"impact_model", impact_model_name(cfg.impact_model)},
         {"fps", cfg.fps},
         {"sample_rate", cfg.sample_rate},
         {"t_hw_s", cfg.t_hw_s},
         {"noise", noise_to_json(cfg.noise)},
         {"rng_seed", cfg.rng_seed},
         {"v_sound", cfg.v_sound},
         {"c_light", cfg.c_light},
         {"duration_s", cfg.duration_s},
         {"image_width", cfg.image_width},
         {"image_height", cfg.image_height},
         {"focal_px", cfg.focal_px},
         {"camera_center_x", cfg.camera_center_x},
         {"camera_center_y", cfg.camera_center_y}};
  save_json(j, path);
}

DatasetSpec read_dataset_spec(const std::filesystem::path& path) {
  json j = load_json(path);
  DatasetSpec spec;
  spec.n_scenes = j.value("n_scenes", spec.n_scenes);
  if (j.contains("depth_range_m")) {
    auto r = j["depth_range_m"];
    spec.depth_range_m = {r.at(0).get<double>(), r.at(1).get<double>()};
  }
  if (j.contains("fps_set")) {
    spec.fps_set = j["fps_set"].get<std::vector<int>>();
  }
  if (j.contains("impact_model_mix")) {
    const auto& mix = j["impact_model_mix"];
    double sharp = mix.value("sharp_impulse", 1.0);
    double ramped = mix.value("ramped_onset", 0.0);
    if (std::abs(sharp + ramped - 1.0) > 1e-9) {
      throw ConfigError("impact_model_mix fractions must sum to 1");
    }
    spec.sharp_fraction = sharp;
  }
  if (j.contains("noise_sweep")) {
    spec.noise_sweep.clear();
    for (const auto& n : j["noise_sweep"]) {
      spec.noise_sweep.push_back(noise_from_json(n));
    }
  }
  spec.multi_collision_fraction =
      j.value("multi_collision_fraction", spec.multi_collision_fraction);
  spec.seed = j.value("seed", spec.seed);
  spec.t_hw_s = j.value("t_hw_s", spec.t_hw_s);
  spec.t_hw_jitter_s = j.value("t_hw_jitter_s", spec.t_hw_jitter_s);
  spec.validate();
  return spec;
}

void write_dataset_spec(const DatasetSpec& spec, const std::filesystem::path& path) {
  json sweep = json::array();
  for (const auto& n : spec.noise_sweep) sweep.push_back(noise_to_json(n));
  json j{{"format_version", kFormatVersion},
         {"n_scenes", spec.n_scenes},
         {"depth_range_m", {spec.depth_range_m.first, spec.depth_range_m.second}},
         {"fps_set", spec.fps_set},
         {"impact_model_mix",
          {{"sharp_impulse", spec.sharp_fraction},
           {"ramped_onset", 1.0 - spec.sharp_fraction}}},
         {"noise_sweep", sweep},
         {"multi_collision_fraction", spec.multi_collision_fraction},
         {"seed", spec.seed},
         {"t_hw_s", spec.t_hw_s},
         {"t_hw_jitter_s", spec.t_hw_jitter_s}};
  save_json(j, path);
}

CalibrationModel read_calibration(const std::filesystem::path& path) {
  json j = load_json(path);
  CalibrationModel m;
  m.t_hw_s = j.value("t_hw_s", 0.0);
  if (j.contains("v_eff") && !j["v_eff"].is_null()) {
    m.v_eff = j["v_eff"].get<double>();
  }
  m.residual_ms = j.value("residual_ms", 0.0);
  return m;
}

void write_calibration(const CalibrationModel& model,
                       const std::filesystem::path& path) {
  json j{{"format_version", kFormatVersion},
         {"t_hw_s", model.t_hw_s},
         {"v_eff", model.v_eff ? json(*model.v_eff) : json(nullptr)},
         {"residual_ms", model.residual_ms}};
  save_json(j, path);
}

SceneTruth read_scene_truth(const std::filesystem::path& path) {
  json j = load_json(path);
  SceneTruth t;
  t.depth_m = j.at("depth_m").get<double>();
  t.collision_times_s = j.at("collision_times_s").get<std::vector<double>>();
  t.onset_samples = j.at("onset_samples").get<std::vector<std::int64_t>>();
  t.t_hw_s = j.value("t_hw_s", 0.0);
  t.overlapping_impacts = j.value("overlapping_impacts", false);
  if (j.contains("collisions")) {
    for (const auto& c : j["collisions"]) {
      t.collisions.push_back({c.at("t_c_s").get<double>(),
                              c.at("onset_sample").get<std::int64_t>(),
                              c.at("depth_m").get<double>()});
    }
  }
  return t;
}

void write_scene_truth(const SceneTruth& truth, const std::filesystem::path& path) {
  json collisions = json::array();
  for (const auto& c : truth.collisions) {
    collisions.push_back({{"t_c_s", c.t_c_s},
                          {"onset_sample", c.onset_sample},
                          {"depth_m", c.depth_m}});
  }
  json j{{"format_version", kFormatVersion},
         {"depth_m", truth.depth_m},
         {"collision_times_s", truth.collision_times_s},
         {"onset_samples", truth.onset_samples},
         {"t_hw_s", truth.t_hw_s},
         {"overlapping_impacts", truth.overlapping_impacts},
         {"collisions", collisions}};
  save_json(j, path);
}

FramesManifest read_frames_manifest(const std::filesystem::path& path) {
  json j = load_json(path);
  FramesManifest m;
  m.fps = j.at("fps").get<int>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.count = j.at("count").get<int>();
  if (j.contains("camera")) m.camera = camera_from_json(j["camera"]);
  return m;
}

void write_frames_manifest(const FramesManifest& manifest,
                           const std::filesystem::path& path) {
  json j{{"format_version", kFormatVersion},
         {"fps", manifest.fps},
         {"width", manifest.width},
         {"height", manifest.height},
         {"count", manifest.count},
         {"camera", camera_to_json(manifest.camera)}};
  save_json(j, path);
}

void write_flow_debug(const FlowField& flow, const std::filesystem::path& dir,
                      const std::string& stem, double px_per_level) {
  const int w = flow.du.width(), h = flow.du.height();
  ImageU8 du_img(w, h), dv_img(w, h);
  int valid = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto encode = [&](double v) {
        return static_cast<std::uint8_t>(
            std::clamp(128.0 + std::round(v / px_per_level), 0.0, 255.0));
      };
      du_img.at(x, y) = flow.valid.at(x, y) ? encode(flow.du.at(x, y)) : 0;
      dv_img.at(x, y) = flow.valid.at(x, y) ? encode(flow.dv.at(x, y)) : 0;
      valid += flow.valid.at(x, y) != 0;
    }
  }
  write_pgm(du_img, dir / (stem + "_du.pgm"));
  write_pgm(dv_img, dir / (stem + "_dv.pgm"));
  json j{{"format_version", kFormatVersion},
         {"width", w},
         {"height", h},
         {"px_per_level", px_per_level},
         {"zero_level", 128},
         {"valid_pixels", valid},
         {"du_file", stem + "_du.pgm"},
         {"dv_file", stem + "_dv.pgm"},
         {"invalid_encoding", 0}};
  save_json(j, dir / (stem + "_flow.json"));
}

}  // namespace ftb
