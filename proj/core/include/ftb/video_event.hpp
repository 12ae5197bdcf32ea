#pragma once

#include <span>
#include <vector>

#include "ftb/image.hpp"
#include "ftb/optical_flow.hpp"
#include "ftb/scene_sim.hpp"

namespace ftb {

// Sub-pixel object centroid per frame with finite-difference motion stats.
// velocity[i] is defined for i >= 1, accel[i] for i >= 2 and
// accel_change[i] for i >= 3; earlier entries are zero.
struct CentroidTrack {
  struct Point {
    int frame_idx;
    double t;
    double x;
    double y;
  };
  std::vector<Point> points;
  std::vector<Mask> masks;  // object support per tracked frame
  std::vector<Vec2> velocity;      // px/frame
  std::vector<Vec2> accel;         // px/frame^2
  std::vector<Vec2> accel_change;  // px/frame^3-equivalent

  static CentroidTrack from_points(std::vector<Point> points,
                                   std::vector<Mask> masks = {});
  std::size_t size() const { return points.size(); }
};

struct TrackParams {
  double moving_threshold_px = 0.35;
  int min_component_area = 12;
};

// Propagates the mask frame to frame via optical flow; the centroid advances
// by the median flow over the tracked component.
CentroidTrack track_centroid(const FrameSequence& frames, const Mask& first_mask,
                             const FlowParams& flow_params,
                             const TrackParams& params = {});

// Frame split around a single collision: e is the last pre-collision frame,
// s = e + 1 the first post-collision frame.
struct CollisionSplit {
  int e = 0;
  int s = 0;
  std::vector<int> pre_set;   // up to k frames ending at e
  std::vector<int> post_set;  // up to k frames starting at s
};

struct SplitParams {
  int k = 3;                  // frames kept per side
  double noise_mult = 5.0;    // collision gate: max|da| > noise_mult * median|da|
  double min_abs_change = 1e-9;
};

CollisionSplit coarse_split(const CentroidTrack& track,
                            const SplitParams& params = {});

struct LinePair {
  double slope_x = 0.0;      // px per second
  double slope_y = 0.0;
  double intercept_x = 0.0;  // px at t = 0
  double intercept_y = 0.0;
};

struct PixelTrajectoryFit {
  int x = 0;
  int y = 0;
  LinePair pre_fit;
  LinePair post_fit;
  double intersection_time = 0.0;  // NaN when both axes are degenerate
  double residual = 0.0;           // rms fit residual, px
};

struct TrajectoryFitParams {
  int k = 3;
  double min_slope_delta = 1e-6;   // px/s; axis conditioning gate
  double max_residual_px = 0.5;    // pixels above this are dropped
};

// anchor_flows[i] is the flow from the anchor frame to frame
// flow_frame_indices[i]; timestamps are the per-frame times of the full
// sequence, seconds.
std::vector<PixelTrajectoryFit> fit_pixel_trajectories(
    std::span<const FlowField> anchor_flows, std::span<const int> flow_frame_indices,
    const Mask& anchor_mask, const CollisionSplit& split,
    std::span<const double> timestamps, const TrajectoryFitParams& params = {});

struct CollisionTimeEstimate {
  double t_video = 0.0;  // seconds, video clock; the L1-optimal intersection
  std::vector<double> per_pixel_times;
  int inlier_count = 0;
  double loss = 0.0;  // sum |t_video - I_p|
};

CollisionTimeEstimate estimate_collision_time(
    std::span<const PixelTrajectoryFit> fits);

// Exact L1 minimizer of sum |t - v| over the values (the median).
double l1_median(std::span<const double> values);

}  // namespace ftb
