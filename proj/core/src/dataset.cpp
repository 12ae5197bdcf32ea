#include "ftb/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ftb/error.hpp"
#include "ftb/json_io.hpp"
#include "ftb/rng.hpp"
#include "ftb/wav.hpp"

namespace ftb {

namespace fs = std::filesystem;

void DatasetSpec::validate() const {
  if (n_scenes <= 0) throw ConfigError("n_scenes must be > 0");
  if (!(depth_range_m.first > 0) || depth_range_m.second < depth_range_m.first) {
    throw ConfigError("bad depth_range_m");
  }
  if (fps_set.empty()) throw ConfigError("fps_set must not be empty");
  for (int f : fps_set) {
    if (f != 30 && f != 60 && f != 120 && f != 240) {
      throw ConfigError("fps_set entries must be in {30, 60, 120, 240}");
    }
  }
  if (sharp_fraction < 0 || sharp_fraction > 1) {
    throw ConfigError("impact model fractions must be in [0, 1]");
  }
  if (multi_collision_fraction < 0 || multi_collision_fraction > 1) {
    throw ConfigError("multi_collision_fraction must be in [0, 1]");
  }
  if (noise_sweep.empty()) throw ConfigError("noise_sweep must not be empty");
  if (t_hw_jitter_s < 0) throw ConfigError("t_hw_jitter_s must be >= 0");
}

namespace {

std::string scene_dir_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", idx);
  return buf;
}

std::string fps_dir_name(int fps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fps_%03d", fps);
  return buf;
}

std::string frame_file_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", idx);
  return buf;
}

// Deterministic subset selection: shuffle indices with the spec seed and mark
// the first `count`.
std::vector<bool> pick_subset(int n, int count, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_index(i + 1));
    std::swap(idx[i], idx[j]);
  }
  std::vector<bool> chosen(n, false);
  for (int i = 0; i < std::min(count, n); ++i) chosen[idx[i]] = true;
  return chosen;
}

struct SceneSetup {
  SceneConfig cfg;                  // base config, fps = max of fps_set
  std::vector<SceneObject> objects; // one or two
  SceneTruth truth;
};

SceneSetup build_scene(const DatasetSpec& spec, int scene_idx, bool multi,
                       bool sharp) {
  Rng rng(derive_seed(spec.seed, 0x5ce000 + scene_idx));

  SceneConfig cfg;
  cfg.depth_m = rng.uniform(spec.depth_range_m.first, spec.depth_range_m.second);
  cfg.drop_height_m = rng.uniform(0.8, 1.5);
  cfg.gravity = 9.8;
  cfg.horizontal_velocity = rng.uniform(-0.5, 0.5);
  cfg.object_radius_m = 0.12;
  cfg.impact_model = sharp ? ImpactModel::kSharpImpulse : ImpactModel::kRampedOnset;
  cfg.fps = *std::max_element(spec.fps_set.begin(), spec.fps_set.end());
  cfg.t_hw_s = spec.t_hw_s + spec.t_hw_jitter_s * rng.gaussian();
  cfg.noise = spec.noise_sweep[scene_idx % spec.noise_sweep.size()];
  cfg.rng_seed = derive_seed(spec.seed, 0xace000 + scene_idx);
  // Single-collision scenes bounce once inside the rendered span; composed
  // scenes stop dead so each object contributes exactly one collision.
  cfg.restitution = multi ? 0.0 : rng.uniform(0.45, 0.8);

  SceneSetup setup;
  double t_c_base = std::sqrt(2.0 * cfg.drop_height_m / cfg.gravity);

  if (!multi) {
    setup.cfg = cfg;
    Trajectory traj = simulate_trajectory(cfg);
    setup.objects.push_back({std::move(traj), 0.0, 0.0, cfg.impact_model});
  } else {
    // Donor object: its own fall, patched in later and to the side.
    double donor_h = rng.uniform(0.8, 1.5);
    double donor_vx = rng.uniform(-0.5, 0.5);
    double donor_t_c = std::sqrt(2.0 * donor_h / cfg.gravity);
    double gap_s = rng.uniform(0.30, 0.45);
    double t_offset = t_c_base + gap_s - donor_t_c;

    cfg.duration_s = t_c_base + gap_s + std::max(0.30, cfg.depth_m / cfg.v_sound + 0.15);

    SceneConfig donor_cfg = cfg;
    donor_cfg.drop_height_m = donor_h;
    donor_cfg.horizontal_velocity = donor_vx;
    donor_cfg.duration_s = cfg.duration_s - t_offset;
    donor_cfg.rng_seed = derive_seed(spec.seed, 0xd0e0d0 + scene_idx);
    ImpactModel donor_model = sharp ? ImpactModel::kRampedOnset
                                    : ImpactModel::kSharpImpulse;

    Trajectory base_traj = simulate_trajectory(cfg);
    Trajectory donor_traj = simulate_trajectory(donor_cfg);

    // Keep the two discs in disjoint image regions.
    auto x_range = [&](const Trajectory& t, double dur) {
      double lo = 1e300, hi = -1e300;
      for (double tt = 0; tt <= dur + 1e-12; tt += dur / 64.0) {
        double x = t.position_at(tt).x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      return std::pair{lo, hi};
    };
    auto [b_lo, b_hi] = x_range(base_traj, cfg.duration_s);
    auto [d_lo, d_hi] = x_range(donor_traj, donor_cfg.duration_s);
    double x_offset = (b_hi - d_lo) + 6.0 * cfg.object_radius_m;

    setup.cfg = cfg;
    setup.objects.push_back({std::move(base_traj), 0.0, 0.0, cfg.impact_model});
    setup.objects.push_back({std::move(donor_traj), t_offset, x_offset, donor_model});
  }

  // Ground truth from the composed objects.
  setup.truth.depth_m = cfg.depth_m;
  setup.truth.t_hw_s = cfg.t_hw_s;
  for (const auto& obj : setup.objects) {
    for (double t_c : obj.traj.collision_times) {
      double t_scene = t_c + obj.t_offset_s;
      double onset_scene = t_scene + cfg.depth_m / cfg.v_sound;
      std::int64_t onset_sample = static_cast<std::int64_t>(
          std::lround((onset_scene - cfg.t_hw_s) * cfg.sample_rate));
      setup.truth.collisions.push_back({t_scene, onset_sample, cfg.depth_m});
    }
  }
  std::sort(setup.truth.collisions.begin(), setup.truth.collisions.end(),
            [](const CollisionTruth& a, const CollisionTruth& b) {
              return a.t_c_s < b.t_c_s;
            });
  for (const auto& c : setup.truth.collisions) {
    setup.truth.collision_times_s.push_back(c.t_c_s);
    setup.truth.onset_samples.push_back(c.onset_sample);
  }
  return setup;
}

}  // namespace

void generate_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  write_dataset_spec(spec, out_dir / "dataset_spec.json");

  Rng pick_rng(derive_seed(spec.seed, 0x91c5));
  const int n_multi =
      static_cast<int>(std::lround(spec.multi_collision_fraction * spec.n_scenes));
  const int n_sharp =
      static_cast<int>(std::lround(spec.sharp_fraction * spec.n_scenes));
  auto multi = pick_subset(spec.n_scenes, n_multi, pick_rng);
  auto sharp = pick_subset(spec.n_scenes, n_sharp, pick_rng);

  for (int i = 0; i < spec.n_scenes; ++i) {
    SceneSetup setup = build_scene(spec, i, multi[i], sharp[i]);
    const fs::path scene_dir = out_dir / scene_dir_name(i);
    fs::create_directories(scene_dir);

    write_scene_config(setup.cfg, scene_dir / "scene_config.json");

    AudioClip audio = synthesize_audio_objects(setup.objects, setup.cfg);
    setup.truth.overlapping_impacts = audio.overlapping_impacts;
    write_scene_truth(setup.truth, scene_dir / "ground_truth.json");
    write_wav(scene_dir / "audio.wav", audio.samples, audio.sample_rate);

    for (int fps : spec.fps_set) {
      SceneConfig render_cfg = setup.cfg;
      render_cfg.fps = fps;
      FrameSequence seq = render_objects(setup.objects, render_cfg);
      const fs::path fps_dir = scene_dir / fps_dir_name(fps);
      fs::create_directories(fps_dir);
      FramesManifest manifest{fps, render_cfg.image_width, render_cfg.image_height,
                              static_cast<int>(seq.frames.size()), seq.camera};
      write_frames_manifest(manifest, fps_dir / "manifest.json");
      for (std::size_t n = 0; n < seq.frames.size(); ++n) {
        write_pgm(seq.frames[n], fps_dir / frame_file_name(static_cast<int>(n)));
      }
    }
  }
}

std::vector<fs::path> list_scene_dirs(const fs::path& dataset_dir) {
  if (!fs::is_directory(dataset_dir)) {
    throw IoError("not a dataset directory: " + dataset_dir.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (entry.is_directory() &&
        entry.path().filename().string().starts_with("scene_")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

FrameSequence load_frames(const fs::path& scene_dir, int fps) {
  const fs::path fps_dir = scene_dir / fps_dir_name(fps);
  if (!fs::is_directory(fps_dir)) {
    throw IoError("missing fps variant " + fps_dir.string());
  }
  FramesManifest manifest = read_frames_manifest(fps_dir / "manifest.json");
  FrameSequence seq;
  seq.fps = manifest.fps;
  seq.camera = manifest.camera;
  seq.frames.reserve(manifest.count);
  for (int n = 0; n < manifest.count; ++n) {
    seq.frames.push_back(read_pgm(fps_dir / frame_file_name(n)));
    seq.timestamps.push_back(static_cast<double>(n) / manifest.fps);
  }
  return seq;
}

AudioClip load_audio(const fs::path& scene_dir) {
  WavData wav = read_wav(scene_dir / "audio.wav");
  AudioClip clip;
  clip.samples = std::move(wav.samples);
  clip.sample_rate = wav.sample_rate;
  clip.clock_offset_s = 0.0;  // the offset is unknown at estimation time
  return clip;
}

SceneTruth load_truth(const fs::path& scene_dir) {
  return read_scene_truth(scene_dir / "ground_truth.json");
}

std::vector<int> available_fps(const fs::path& scene_dir) {
  std::vector<int> out;
  for (const auto& entry : fs::directory_iterator(scene_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("fps_")) {
      out.push_back(std::stoi(name.substr(4)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ftb
