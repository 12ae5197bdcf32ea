// Synthetic inputs shared across tests: textured patterns, integer warps,
// hand-built trajectories and analytic flow fields.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ftb/image.hpp"
#include "ftb/optical_flow.hpp"
#include "ftb/rng.hpp"
#include "ftb/scene_sim.hpp"
#include "ftb/video_event.hpp"

namespace ftb::testing {

// Smooth high-contrast pattern (seeded value noise), good for flow tests.
inline ImageU8 textured_pattern(int w, int h, std::uint64_t seed = 7) {
  Rng rng(seed);
  const int cell = 5;
  int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& v : grid) v = rng.uniform01();
  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double fx = static_cast<double>(x) / cell, fy = static_cast<double>(y) / cell;
      int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      double wx = fx - x0, wy = fy - y0;
      double v = (1 - wy) * ((1 - wx) * grid[y0 * gw + x0] + wx * grid[y0 * gw + x0 + 1]) +
                 wy * ((1 - wx) * grid[(y0 + 1) * gw + x0] + wx * grid[(y0 + 1) * gw + x0 + 1]);
      out.at(x, y) = static_cast<std::uint8_t>(30 + 200 * v);
    }
  }
  return out;
}

// Integer translation with replicated borders.
inline ImageU8 shift_image(const ImageU8& src, int dx, int dy) {
  ImageU8 out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      int sx = std::clamp(x - dx, 0, src.width() - 1);
      int sy = std::clamp(y - dy, 0, src.height() - 1);
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

// Single ballistic-free trajectory with constant velocity (no collisions).
inline Trajectory constant_velocity_trajectory(Vec3 start, Vec3 vel, double duration) {
  Trajectory traj;
  traj.segments.push_back({0.0, duration, start, vel, 0.0});
  for (double t = 0; t <= duration; t += duration / 100.0) {
    traj.samples.push_back({t, traj.position_at(t), vel});
  }
  return traj;
}

// Piecewise-linear displacement field sampled as anchor flows: displacement of
// every mask pixel follows pre/post lines crossing at t_c.
struct AnalyticMotion {
  double t_c;
  Vec2 pre_slope;    // px/s
  Vec2 post_slope;   // px/s
};

// Builds flow fields at the given frame times, all relative to an anchor at
// time t_anchor (displacement zero there by construction).
inline std::vector<FlowField> analytic_anchor_flows(
    const AnalyticMotion& motion, const Mask& mask, double t_anchor,
    std::span<const double> frame_times) {
  auto disp_at = [&](double t) -> Vec2 {
    // Displacement of the object itself, measured from t_anchor.
    auto pos = [&](double tt) -> Vec2 {
      if (tt <= motion.t_c) {
        return {motion.pre_slope.x * (tt - motion.t_c),
                motion.pre_slope.y * (tt - motion.t_c)};
      }
      return {motion.post_slope.x * (tt - motion.t_c),
              motion.post_slope.y * (tt - motion.t_c)};
    };
    Vec2 p = pos(t), a = pos(t_anchor);
    return {p.x - a.x, p.y - a.y};
  };
  std::vector<FlowField> flows;
  for (double t : frame_times) {
    Vec2 d = disp_at(t);
    FlowField f{ImageD(mask.width(), mask.height(), 0.0),
                ImageD(mask.width(), mask.height(), 0.0),
                Mask(mask.width(), mask.height(), 0)};
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask.at(x, y)) continue;
        f.du.at(x, y) = d.x;
        f.dv.at(x, y) = d.y;
        f.valid.at(x, y) = 1;
      }
    }
    flows.push_back(std::move(f));
  }
  return flows;
}

// Analytic centroid track of a bounce: ballistic in px units with an impulse
// at t_c placed anywhere inside a frame interval.
inline CentroidTrack analytic_bounce_track(int n_frames, double fps, double t_c,
                                           double vx_px, double vy_pre_px,
                                           double vy_post_px, double g_px) {
  std::vector<CentroidTrack::Point> pts;
  auto pos = [&](double t) -> Vec2 {
    if (t <= t_c) {
      double dt = t - t_c;
      return {vx_px * dt, vy_pre_px * dt + 0.5 * g_px * dt * dt};
    }
    double dt = t - t_c;
    return {vx_px * dt, vy_post_px * dt + 0.5 * g_px * dt * dt};
  };
  for (int i = 0; i < n_frames; ++i) {
    double t = i / fps;
    Vec2 p = pos(t);
    pts.push_back({i, t, 100.0 + p.x, 80.0 + p.y});
  }
  return CentroidTrack::from_points(std::move(pts));
}

}  // namespace ftb::testing
