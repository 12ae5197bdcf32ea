#include "ftb/video_event.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftb/error.hpp"

namespace ftb {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// Mean of the central half: smoother than the median at sub-pixel scale,
// still immune to the occlusion fringe.
double trimmed_mean(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t lo = v.size() / 4;
  std::size_t hi = v.size() - lo;
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) acc += v[i];
  return acc / (hi - lo);
}

}  // namespace

double l1_median(std::span<const double> values) {
  return median_of(std::vector<double>(values.begin(), values.end()));
}

CentroidTrack CentroidTrack::from_points(std::vector<Point> pts,
                                         std::vector<Mask> masks) {
  CentroidTrack tr;
  tr.points = std::move(pts);
  tr.masks = std::move(masks);
  const std::size_t n = tr.points.size();
  tr.velocity.assign(n, {0, 0});
  tr.accel.assign(n, {0, 0});
  tr.accel_change.assign(n, {0, 0});
  for (std::size_t i = 1; i < n; ++i) {
    tr.velocity[i] = {tr.points[i].x - tr.points[i - 1].x,
                      tr.points[i].y - tr.points[i - 1].y};
  }
  for (std::size_t i = 2; i < n; ++i) {
    tr.accel[i] = tr.velocity[i] - tr.velocity[i - 1];
  }
  for (std::size_t i = 3; i < n; ++i) {
    tr.accel_change[i] = tr.accel[i] - tr.accel[i - 1];
  }
  return tr;
}

CentroidTrack track_centroid(const FrameSequence& frames, const Mask& first_mask,
                             const FlowParams& flow_params,
                             const TrackParams& params) {
  const int n = static_cast<int>(frames.frames.size());
  if (n < 2) throw InputError("track_centroid: need at least 2 frames");
  if (mask_area(first_mask) == 0) {
    throw InputError("track_centroid: empty initial mask");
  }

  std::vector<CentroidTrack::Point> points;
  std::vector<Mask> masks;
  Mask cur = first_mask;
  Vec2 c = *mask_centroid(cur);
  points.push_back({0, frames.timestamps[0], c.x, c.y});
  masks.push_back(cur);

  for (int i = 0; i + 1 < n; ++i) {
    FlowField flow = compute_flow(frames.frames[i], frames.frames[i + 1], flow_params);
    auto comps = moving_components(flow, params.moving_threshold_px,
                                   params.min_component_area);
    const MotionComponent* best = nullptr;
    int best_overlap = 0;
    for (const auto& comp : comps) {
      int ov = mask_overlap(comp.mask, cur);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = &comp;
      }
    }
    // No moving component, or only a fragment of one, means the net
    // displacement fell under the motion threshold (a reversal inside the
    // frame interval, or a stopped object). Follow the raw flow over the
    // current mask instead.
    const bool component_reliable =
        best && best_overlap >= std::max(params.min_component_area,
                                         mask_area(cur) / 4);
    const Mask& support = component_reliable ? best->mask : cur;

    // Median displacement across the support; robust to the occlusion fringe
    // at the leading edge.
    std::vector<double> us, vs;
    for (int y = 0; y < flow.du.height(); ++y) {
      for (int x = 0; x < flow.du.width(); ++x) {
        if (support.at(x, y) && flow.valid.at(x, y)) {
          us.push_back(flow.du.at(x, y));
          vs.push_back(flow.dv.at(x, y));
        }
      }
    }
    if (us.size() < static_cast<std::size_t>(
                        std::max(params.min_component_area, mask_area(cur) / 4))) {
      throw TrackingError("target lost at frame " + std::to_string(i + 1), i);
    }
    Vec2 disp{trimmed_mean(us), trimmed_mean(vs)};
    c = c + disp;
    points.push_back({i + 1, frames.timestamps[i + 1], c.x, c.y});
    cur = shift_mask(support, static_cast<int>(std::lround(disp.x)),
                     static_cast<int>(std::lround(disp.y)));
    masks.push_back(cur);
  }
  return CentroidTrack::from_points(std::move(points), std::move(masks));
}

CollisionSplit coarse_split(const CentroidTrack& track, const SplitParams& params) {
  const int n = static_cast<int>(track.size());
  if (n < 2 * params.k + 2) {
    throw InputError("coarse_split: track too short");
  }

  // Collision gate on the acceleration-change magnitudes.
  std::vector<double> da_mag;
  for (int i = 3; i < n; ++i) da_mag.push_back(track.accel_change[i].norm());
  double da_max = *std::max_element(da_mag.begin(), da_mag.end());
  double da_median = median_of(da_mag);
  if (da_max <= std::max(params.noise_mult * da_median, params.min_abs_change)) {
    throw NoCollisionError("no collision detected: acceleration change at noise floor");
  }

  // A collision between frames e and e+1 perturbs exactly the accelerations at
  // indices e+1 and e+2, and their combined anomaly equals the full velocity
  // jump regardless of where inside the frame interval the impact fell. Locate
  // that adjacent pair; argmax of a single |delta a| is phase-ambiguous.
  std::vector<double> ax, ay;
  for (int i = 2; i < n; ++i) {
    ax.push_back(track.accel[i].x);
    ay.push_back(track.accel[i].y);
  }
  double med_ax = median_of(ax), med_ay = median_of(ay);
  auto anomaly = [&](int i) {  // i is a track index with accel defined
    return std::hypot(track.accel[i].x - med_ax, track.accel[i].y - med_ay);
  };
  int best_i = -1;
  double best_score = -1.0;
  for (int i = 2; i + 1 < n; ++i) {
    double score = anomaly(i) + anomaly(i + 1);
    if (score > best_score + 1e-12) {  // ties keep the earlier transition
      best_score = score;
      best_i = i;
    }
  }
  int e_pos = best_i - 1;  // track position of the last pre-collision frame
  if (e_pos < 1 || e_pos + 1 >= n) {
    throw NoCollisionError("collision too close to the track boundary");
  }

  CollisionSplit split;
  split.e = track.points[e_pos].frame_idx;
  split.s = track.points[e_pos + 1].frame_idx;
  for (int i = std::max(0, e_pos - params.k + 1); i <= e_pos; ++i) {
    split.pre_set.push_back(track.points[i].frame_idx);
  }
  for (int i = e_pos + 1; i < std::min(n, e_pos + 1 + params.k); ++i) {
    split.post_set.push_back(track.points[i].frame_idx);
  }
  return split;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;  // residual sum of squares
  int count = 0;
};

LineFit ols_line(std::span<const double> t, std::span<const double> y) {
  LineFit f;
  f.count = static_cast<int>(t.size());
  if (f.count < 2) return f;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int i = 0; i < f.count; ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  double nd = f.count;
  double denom = nd * stt - st * st;
  if (std::abs(denom) < 1e-300) return f;
  f.slope = (nd * sty - st * sy) / denom;
  f.intercept = (sy - f.slope * st) / nd;
  for (int i = 0; i < f.count; ++i) {
    double r = y[i] - (f.slope * t[i] + f.intercept);
    f.rss += r * r;
  }
  return f;
}

}  // namespace

std::vector<PixelTrajectoryFit> fit_pixel_trajectories(
    std::span<const FlowField> anchor_flows, std::span<const int> flow_frame_indices,
    const Mask& anchor_mask, const CollisionSplit& split,
    std::span<const double> timestamps, const TrajectoryFitParams& params) {
  if (anchor_flows.size() != flow_frame_indices.size()) {
    throw InputError("fit_pixel_trajectories: flows/indices size mismatch");
  }
  // Positions of the pre/post frames within the flow list.
  auto find_flow = [&](int frame_idx) -> int {
    for (std::size_t i = 0; i < flow_frame_indices.size(); ++i) {
      if (flow_frame_indices[i] == frame_idx) return static_cast<int>(i);
    }
    return -1;
  };
  std::vector<int> pre_flows, post_flows;
  for (int f : split.pre_set) {
    int i = find_flow(f);
    if (i >= 0) pre_flows.push_back(i);
  }
  for (int f : split.post_set) {
    int i = find_flow(f);
    if (i >= 0) post_flows.push_back(i);
  }
  if (pre_flows.size() < 2 || post_flows.size() < 2) {
    throw InputError("fit_pixel_trajectories: need >= 2 frames per side");
  }

  std::vector<PixelTrajectoryFit> fits;
  const int w = anchor_mask.width(), h = anchor_mask.height();
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      if (!anchor_mask.at(px, py)) continue;

      auto gather = [&](const std::vector<int>& which, std::vector<double>& t,
                        std::vector<double>& dx, std::vector<double>& dy) {
        for (int i : which) {
          const FlowField& f = anchor_flows[i];
          if (!f.valid.at(px, py)) continue;
          t.push_back(timestamps[flow_frame_indices[i]]);
          dx.push_back(f.du.at(px, py));
          dy.push_back(f.dv.at(px, py));
        }
      };
      std::vector<double> t0, x0, y0, t1, x1, y1;
      gather(pre_flows, t0, x0, y0);
      gather(post_flows, t1, x1, y1);
      if (t0.size() < 2 || t1.size() < 2) continue;  // fit error for this pixel

      LineFit pre_x = ols_line(t0, x0), pre_y = ols_line(t0, y0);
      LineFit post_x = ols_line(t1, x1), post_y = ols_line(t1, y1);

      PixelTrajectoryFit fit;
      fit.x = px;
      fit.y = py;
      fit.pre_fit = {pre_x.slope, pre_y.slope, pre_x.intercept, pre_y.intercept};
      fit.post_fit = {post_x.slope, post_y.slope, post_x.intercept, post_y.intercept};

      int dof = static_cast<int>(t0.size() + t1.size());
      double mse = (pre_x.rss + pre_y.rss + post_x.rss + post_y.rss) / (2.0 * dof);
      fit.residual = std::sqrt(mse);
      if (fit.residual > params.max_residual_px) continue;

      // Per-axis intersection where the slopes actually differ; the combined
      // time weights each axis by how sharply its lines cross relative to the
      // fit noise.
      double wsum = 0.0, tsum = 0.0;
      auto accumulate = [&](const LineFit& pre, const LineFit& post) {
        double dslope = pre.slope - post.slope;
        if (std::abs(dslope) <= params.min_slope_delta) return;
        double t_axis = (post.intercept - pre.intercept) / dslope;
        double rms = std::sqrt((pre.rss + post.rss) /
                               std::max(1, pre.count + post.count - 4));
        double wgt = std::abs(dslope) / (rms + 1e-9);
        wgt *= wgt;
        wsum += wgt;
        tsum += wgt * t_axis;
      };
      accumulate(pre_x, post_x);
      accumulate(pre_y, post_y);
      fit.intersection_time =
          wsum > 0 ? tsum / wsum : std::numeric_limits<double>::quiet_NaN();
      fits.push_back(fit);
    }
  }
  if (fits.empty()) {
    throw EstimationError("fit_pixel_trajectories: no pixel produced a usable fit");
  }
  return fits;
}

CollisionTimeEstimate estimate_collision_time(
    std::span<const PixelTrajectoryFit> fits) {
  CollisionTimeEstimate est;
  for (const auto& f : fits) {
    if (std::isfinite(f.intersection_time)) {
      est.per_pixel_times.push_back(f.intersection_time);
    }
  }
  if (est.per_pixel_times.empty()) {
    throw EstimationError("estimate_collision_time: no finite intersection times");
  }
  est.inlier_count = static_cast<int>(est.per_pixel_times.size());
  est.t_video = l1_median(est.per_pixel_times);
  for (double v : est.per_pixel_times) est.loss += std::abs(est.t_video - v);
  return est;
}

}  // namespace ftb
