#include "ftb/scene_sim.hpp"

#include <algorithm>
#include <cmath>

#include "ftb/error.hpp"
#include "ftb/rng.hpp"

namespace ftb {

namespace {

constexpr double kRestVelocity = 0.05;   // m/s, rebound below this stops the object
constexpr double kImpulseLen = 0.040;    // s, burst length (sharp)
constexpr double kImpulseDecay = 0.005;  // s, exponential decay constant
constexpr double kRampLen = 0.003;       // s, ramped-onset linear rise

// rng stream ids
constexpr std::uint64_t kStreamBackground = 1;
constexpr std::uint64_t kStreamPixelNoise = 2;
constexpr std::uint64_t kStreamAudioNoise = 3;
constexpr std::uint64_t kStreamImpact = 4;
constexpr std::uint64_t kStreamJitter = 5;

}  // namespace

void SceneConfig::validate() const {
  if (!(depth_m > 0)) throw ConfigError("depth_m must be > 0");
  if (!(drop_height_m > 0)) throw ConfigError("drop_height_m must be > 0");
  if (!(gravity > 0)) throw ConfigError("gravity must be > 0");
  if (restitution < 0 || restitution > 1) {
    throw ConfigError("restitution must be in [0, 1]");
  }
  if (!(object_radius_m > 0)) throw ConfigError("object_radius_m must be > 0");
  if (fps != 30 && fps != 60 && fps != 120 && fps != 240) {
    throw ConfigError("fps must be one of {30, 60, 120, 240}");
  }
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (noise.pixel_noise_sigma < 0 || noise.audio_snr_db < 0 ||
      noise.centroid_jitter_px < 0) {
    throw ConfigError("noise parameters must be >= 0");
  }
  if (image_width < 16 || image_height < 16) {
    throw ConfigError("image dimensions too small");
  }
  if (!(v_sound > 0) || !(c_light > v_sound)) {
    throw ConfigError("need 0 < v_sound < c_light");
  }
  if (duration_s < 0) throw ConfigError("duration_s must be >= 0");
}

double SceneConfig::resolved_duration() const {
  if (duration_s > 0) return duration_s;
  // Cover the first collision, three 30-FPS-frames of rebound, and the
  // acoustic arrival of the impact.
  double t_c1 = std::sqrt(2.0 * drop_height_m / gravity);
  return t_c1 + std::max(0.30, depth_m / v_sound + 0.15);
}

Vec3 Trajectory::position_at(double t) const {
  if (segments.empty()) throw InputError("empty trajectory");
  const BallisticSegment* seg = &segments.back();
  for (const auto& s : segments) {
    if (t < s.t1) {
      seg = &s;
      break;
    }
  }
  double dt = std::clamp(t, seg->t0, seg->t1) - seg->t0;
  return {seg->p0.x + seg->v0.x * dt,
          seg->p0.y + seg->v0.y * dt - 0.5 * seg->gravity * dt * dt, seg->p0.z};
}

Vec3 Trajectory::velocity_at(double t) const {
  if (segments.empty()) throw InputError("empty trajectory");
  const BallisticSegment* seg = &segments.back();
  for (const auto& s : segments) {
    if (t < s.t1) {
      seg = &s;
      break;
    }
  }
  double dt = std::clamp(t, seg->t0, seg->t1) - seg->t0;
  return {seg->v0.x, seg->v0.y - seg->gravity * dt, 0.0};
}

Trajectory simulate_trajectory(const SceneConfig& cfg) {
  cfg.validate();
  const double duration = cfg.resolved_duration();
  const double g = cfg.gravity;

  Trajectory traj;
  double t0 = 0.0;
  Vec3 p{0.0, cfg.drop_height_m, cfg.depth_m};
  Vec3 v{cfg.horizontal_velocity, 0.0, 0.0};
  bool at_rest = false;

  while (t0 < duration) {
    if (at_rest) {
      traj.segments.push_back({t0, duration, p, {0, 0, 0}, 0.0});
      break;
    }
    // Landing time of y(t) = y0 + vy*dt - g*dt^2/2 = 0, dt > 0.
    double disc = v.y * v.y + 2.0 * g * p.y;
    double dt_land = (v.y + std::sqrt(std::max(0.0, disc))) / g;
    double t_land = t0 + dt_land;
    if (t_land >= duration || dt_land <= 0) {
      traj.segments.push_back({t0, duration, p, v, g});
      break;
    }
    traj.segments.push_back({t0, t_land, p, v, g});
    traj.collision_times.push_back(t_land);
    double impact_speed = std::sqrt(std::max(0.0, v.y * v.y + 2.0 * g * p.y));
    double rebound = cfg.restitution * impact_speed;
    p = {p.x + v.x * dt_land, 0.0, p.z};
    if (rebound < kRestVelocity) {
      v = {0.0, 0.0, 0.0};
      at_rest = true;
    } else {
      v = {v.x, rebound, 0.0};
    }
    t0 = t_land;
  }

  // Sample at 10x the frame rate for rendering headroom.
  const double dt = 1.0 / (10.0 * cfg.fps);
  const int n = static_cast<int>(std::floor(duration / dt)) + 1;
  traj.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    double t = i * dt;
    traj.samples.push_back({t, traj.position_at(t), traj.velocity_at(t)});
  }
  return traj;
}

namespace {

// Low-frequency value noise: coarse seeded grid, bilinearly upsampled. Gives
// the static background enough texture for flow conditioning tests without
// looking like salt-and-pepper noise.
ImageU8 make_background(int w, int h, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kStreamBackground));
  const int cell = 6;
  int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid) v = rng.uniform01();
  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y) {
    double fy = static_cast<double>(y) / cell;
    int y0 = static_cast<int>(fy);
    double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = static_cast<double>(x) / cell;
      int x0 = static_cast<int>(fx);
      double wx = fx - x0;
      double v00 = grid[y0 * gw + x0];
      double v10 = grid[y0 * gw + x0 + 1];
      double v01 = grid[(y0 + 1) * gw + x0];
      double v11 = grid[(y0 + 1) * gw + x0 + 1];
      double v = (1 - wy) * ((1 - wx) * v00 + wx * v10) +
                 wy * ((1 - wx) * v01 + wx * v11);
      out.at(x, y) = static_cast<std::uint8_t>(20.0 + 90.0 * v);
    }
  }
  return out;
}

struct ObjectState {
  Vec2 center_px;
  double radius_px;
};

// Textured disc, 4x4 supersampled for sub-pixel placement. A radial falloff
// modulated by an even-symmetric plaid keeps the windowed flow system well
// conditioned across the whole disc; the even symmetry keeps the intensity
// centroid exactly at the disc centre.
void draw_disc(ImageU8& img, const Vec2& c, double radius_px) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius_px - 1)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(c.x + radius_px + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius_px - 1)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(c.y + radius_px + 1)));
  const double r2 = radius_px * radius_px;
  const double wave = 2.0 * 3.14159265358979323846 / 5.2;  // ~5 px plaid period
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double cover = 0.0, tex = 0.0;
      for (int sy = 0; sy < 4; ++sy) {
        double py = y - 0.5 + (sy + 0.5) / 4.0;
        for (int sx = 0; sx < 4; ++sx) {
          double px = x - 0.5 + (sx + 0.5) / 4.0;
          double dx = px - c.x, dy = py - c.y;
          double d2 = dx * dx + dy * dy;
          if (d2 < r2) {
            cover += 1.0;
            double rho2 = d2 / r2;
            double radial = 0.45 + 0.55 * (1.0 - rho2);
            double plaid = 0.78 + 0.22 * std::sin(wave * dx) * std::sin(wave * dy);
            tex += radial * plaid;
          }
        }
      }
      if (cover == 0) continue;
      cover /= 16.0;
      tex /= 16.0 * std::max(cover, 1e-9);
      double obj = 235.0 * tex;
      double bg = img.at(x, y);
      double v = cover * obj + (1.0 - cover) * bg;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
}

}  // namespace

Camera resolve_camera(const std::vector<SceneObject>& objects,
                      const SceneConfig& cfg) {
  if (cfg.focal_px > 0) {
    return {cfg.focal_px,
            (cfg.image_width - 1) / 2.0,
            (cfg.image_height - 1) / 2.0,
            cfg.camera_center_x,
            cfg.camera_center_y,
            cfg.depth_m};
  }
  const double duration = cfg.resolved_duration();
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const auto& obj : objects) {
    for (double t = 0.0; t <= duration + 1e-12; t += duration / 256.0) {
      Vec3 p = obj.traj.position_at(t - obj.t_offset_s);
      x_min = std::min(x_min, p.x + obj.x_offset_m);
      x_max = std::max(x_max, p.x + obj.x_offset_m);
      y_min = std::min(y_min, p.y);
      y_max = std::max(y_max, p.y);
    }
  }
  const double r = cfg.object_radius_m;
  const double pad = 2.0 * r + 0.05 * std::max(x_max - x_min, y_max - y_min) + 0.02;
  double bw = (x_max - x_min) + 2 * pad;
  double bh = (y_max - y_min) + 2 * pad;
  const double fill = 0.92;
  double focal = std::min(fill * cfg.image_width * cfg.depth_m / bw,
                          fill * cfg.image_height * cfg.depth_m / bh);
  // Keep the disc at least 8 px across even if the trajectory then overflows
  // the frame.
  focal = std::max(focal, 8.0 * cfg.depth_m / (2.0 * r));
  return {focal,
          (cfg.image_width - 1) / 2.0,
          (cfg.image_height - 1) / 2.0,
          (x_min + x_max) / 2.0,
          (y_min + y_max) / 2.0,
          cfg.depth_m};
}

FrameSequence render_objects(const std::vector<SceneObject>& objects,
                             const SceneConfig& cfg) {
  cfg.validate();
  if (objects.empty()) throw InputError("no objects to render");
  const double duration = cfg.resolved_duration();
  for (const auto& obj : objects) {
    if (obj.traj.end_time() + obj.t_offset_s < duration - 1e-9) {
      throw InputError("trajectory does not cover the rendered time span");
    }
  }

  FrameSequence seq;
  seq.fps = cfg.fps;
  seq.camera = resolve_camera(objects, cfg);
  const Camera& cam = seq.camera;
  const double radius_px = cam.focal_px * cfg.object_radius_m / cfg.depth_m;
  const double light_delay = cfg.depth_m / cfg.c_light;

  const ImageU8 background =
      make_background(cfg.image_width, cfg.image_height, cfg.rng_seed);
  Rng jitter_rng(derive_seed(cfg.rng_seed, kStreamJitter));

  const int n_frames = static_cast<int>(std::floor(duration * cfg.fps)) + 1;
  int visible_frames = 0;
  for (int n = 0; n < n_frames; ++n) {
    const double t = static_cast<double>(n) / cfg.fps;
    ImageU8 frame = background;
    for (const auto& obj : objects) {
      // The image reflects the scene state one light trip earlier.
      Vec3 p = obj.traj.position_at(t - light_delay - obj.t_offset_s);
      p.x += obj.x_offset_m;
      Vec2 c = cam.project(p);
      if (cfg.noise.centroid_jitter_px > 0) {
        c.x += cfg.noise.centroid_jitter_px * jitter_rng.gaussian();
        c.y += cfg.noise.centroid_jitter_px * jitter_rng.gaussian();
      }
      if (c.x + radius_px > 0 && c.x - radius_px < cfg.image_width - 1 &&
          c.y + radius_px > 0 && c.y - radius_px < cfg.image_height - 1) {
        ++visible_frames;
      }
      draw_disc(frame, c, radius_px);
    }
    if (cfg.noise.pixel_noise_sigma > 0) {
      Rng noise_rng(derive_seed(cfg.rng_seed, kStreamPixelNoise + 64 * n));
      for (auto& px : frame.data()) {
        double v = px + cfg.noise.pixel_noise_sigma * noise_rng.gaussian();
        px = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.timestamps.push_back(t);
  }
  if (visible_frames == 0) {
    throw RenderError("object projects outside the frame for all frames");
  }
  return seq;
}

FrameSequence render_frames(const Trajectory& traj, const SceneConfig& cfg) {
  return render_objects({{traj, 0.0, 0.0, cfg.impact_model}}, cfg);
}

Mask object_support_mask(const Trajectory& traj, const SceneConfig& cfg,
                         const Camera& cam, double frame_time, double t_offset_s,
                         double x_offset_m) {
  Vec3 p = traj.position_at(frame_time - cfg.depth_m / cfg.c_light - t_offset_s);
  p.x += x_offset_m;
  Vec2 c = cam.project(p);
  double radius_px = cam.focal_px * cfg.object_radius_m / cfg.depth_m;
  Mask m(cfg.image_width, cfg.image_height, 0);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      double dx = x - c.x, dy = y - c.y;
      if (dx * dx + dy * dy <= radius_px * radius_px) m.at(x, y) = 1;
    }
  }
  return m;
}

namespace {

std::vector<float> make_impact_waveform(ImpactModel model, double amplitude,
                                        int sample_rate, Rng& rng) {
  const int ramp_n = static_cast<int>(std::lround(kRampLen * sample_rate));
  const int total =
      static_cast<int>(std::lround(kImpulseLen * sample_rate)) +
      (model == ImpactModel::kRampedOnset ? ramp_n : 0);
  std::vector<float> w(total);
  for (int i = 0; i < total; ++i) {
    double env;
    if (model == ImpactModel::kSharpImpulse) {
      env = std::exp(-static_cast<double>(i) / (kImpulseDecay * sample_rate));
    } else {
      double rise = ramp_n > 0 ? std::min(1.0, static_cast<double>(i) / ramp_n) : 1.0;
      double decay_t = std::max(0, i - ramp_n);
      env = rise * std::exp(-decay_t / (kImpulseDecay * sample_rate));
    }
    // First sample of a sharp impulse is at full amplitude by construction.
    double x = (i == 0 && model == ImpactModel::kSharpImpulse)
                   ? 1.0
                   : rng.uniform_signed();
    w[i] = static_cast<float>(amplitude * env * x);
  }
  return w;
}

}  // namespace

AudioClip synthesize_audio_objects(const std::vector<SceneObject>& objects,
                                   const SceneConfig& cfg) {
  cfg.validate();
  const double duration = cfg.resolved_duration();
  const int fs = cfg.sample_rate;
  const std::int64_t n =
      static_cast<std::int64_t>(std::ceil(duration * fs));

  AudioClip clip;
  clip.sample_rate = fs;
  clip.clock_offset_s = cfg.t_hw_s;
  clip.samples.assign(static_cast<std::size_t>(n), 0.0f);

  bool any_collision = false;
  std::vector<std::pair<std::int64_t, std::int64_t>> placed;  // [start, end)
  int impact_idx = 0;
  for (const auto& obj : objects) {
    for (double t_c : obj.traj.collision_times) {
      any_collision = true;
      const double onset_scene = t_c + obj.t_offset_s + cfg.depth_m / cfg.v_sound;
      const double onset_audio_clock = onset_scene - cfg.t_hw_s;
      const std::int64_t start =
          static_cast<std::int64_t>(std::lround(onset_audio_clock * fs));
      Rng rng(derive_seed(cfg.rng_seed, kStreamImpact + 1024 * impact_idx));
      ++impact_idx;
      auto w = make_impact_waveform(obj.impact_model, 1.0 / cfg.depth_m, fs, rng);
      const std::int64_t end = start + static_cast<std::int64_t>(w.size());

      bool overlaps = false;
      for (auto [s, e] : placed) {
        if (start < e && end > s) overlaps = true;
      }
      if (overlaps) clip.overlapping_impacts = true;
      for (std::size_t i = 0; i < w.size(); ++i) {
        std::int64_t k = start + static_cast<std::int64_t>(i);
        if (k < 0 || k >= n) continue;
        // Composition rule: overwrite when the segments are disjoint, add
        // when they overlap.
        if (overlaps) {
          clip.samples[k] += w[i];
        } else {
          clip.samples[k] = w[i];
        }
      }
      placed.emplace_back(start, end);
    }
  }
  if (!any_collision) {
    throw InputError("trajectory has no collision to sonify");
  }

  if (cfg.noise.audio_snr_db > 0) {
    double peak = 1.0 / cfg.depth_m;
    double sigma = peak / std::pow(10.0, cfg.noise.audio_snr_db / 20.0);
    Rng rng(derive_seed(cfg.rng_seed, kStreamAudioNoise));
    for (auto& s : clip.samples) {
      s += static_cast<float>(sigma * rng.gaussian());
    }
  }
  for (auto& s : clip.samples) s = std::clamp(s, -1.0f, 1.0f);
  return clip;
}

AudioClip synthesize_audio(const Trajectory& traj, const SceneConfig& cfg) {
  return synthesize_audio_objects({{traj, 0.0, 0.0, cfg.impact_model}}, cfg);
}

}  // namespace ftb
