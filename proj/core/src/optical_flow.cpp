#include "ftb/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "ftb/error.hpp"

namespace ftb {

namespace {

ImageF downsample_half(const ImageF& src) {
  int w = src.width() / 2, h = src.height() / 2;
  ImageF out(w, h);
  auto clamp_at = [&](int x, int y) {
    x = std::clamp(x, 0, src.width() - 1);
    y = std::clamp(y, 0, src.height() - 1);
    return src.at(x, y);
  };
  // 5-tap binomial smoothing before decimation keeps fine texture from
  // aliasing at the coarse levels.
  const float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sx = 2 * x, sy = 2 * y;
      float acc = 0.f;
      for (int j = -2; j <= 2; ++j) {
        float rowacc = 0.f;
        for (int i = -2; i <= 2; ++i) {
          rowacc += k[i + 2] * clamp_at(sx + i, sy + j);
        }
        acc += k[j + 2] * rowacc;
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::vector<ImageF> build_pyramid(const ImageF& base, int levels, int window_radius) {
  std::vector<ImageF> pyr{base};
  for (int l = 1; l < levels; ++l) {
    const ImageF& prev = pyr.back();
    if (std::min(prev.width(), prev.height()) / 2 < 2 * window_radius + 3) break;
    pyr.push_back(downsample_half(prev));
  }
  return pyr;
}

template <typename T>
double sample_bilinear(const Plane<T>& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  int x1 = std::min(x0 + 1, img.width() - 1);
  int y1 = std::min(y0 + 1, img.height() - 1);
  double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
         fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

// Summed-area table with a zero top/left border row, double precision.
struct Sat {
  int w = 0, h = 0;
  std::vector<double> s;

  void build(const std::vector<float>& img, int width, int height) {
    w = width;
    h = height;
    s.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
      double rowsum = 0.0;
      const float* src = img.data() + static_cast<std::size_t>(y) * w;
      double* cur = s.data() + static_cast<std::size_t>(y + 1) * (w + 1);
      const double* up = s.data() + static_cast<std::size_t>(y) * (w + 1);
      for (int x = 0; x < w; ++x) {
        rowsum += src[x];
        cur[x + 1] = up[x + 1] + rowsum;
      }
    }
  }

  // Inclusive-rectangle sum with clamped borders.
  double box(int x, int y, int r) const {
    int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
    int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
    const double* p = s.data();
    auto at = [&](int xx, int yy) {
      return p[static_cast<std::size_t>(yy) * (w + 1) + xx];
    };
    return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
  }

  static int box_count(int x, int y, int r, int w, int h) {
    int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
    int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
    return (x1 - x0 + 1) * (y1 - y0 + 1);
  }
};

struct Roi {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive

  static Roi full(int w, int h) { return {0, 0, w - 1, h - 1}; }
  Roi scaled_down(int levels, int w, int h) const {
    int f = 1 << levels;
    return {std::max(0, x0 / f - 1), std::max(0, y0 / f - 1),
            std::min(w - 1, x1 / f + 1), std::min(h - 1, y1 / f + 1)};
  }
};

// 3x3 box smoothing restricted to the ROI.
void smooth_in_roi(ImageD& img, const Roi& roi) {
  static thread_local std::vector<double> tmp;
  const int w = img.width();
  tmp.assign(img.data().begin(), img.data().end());
  auto src = [&](int x, int y) { return tmp[static_cast<std::size_t>(y) * w + x]; };
  for (int y = roi.y0; y <= roi.y1; ++y) {
    for (int x = roi.x0; x <= roi.x1; ++x) {
      double acc = 0.0;
      int n = 0;
      for (int j = -1; j <= 1; ++j) {
        int yy = y + j;
        if (yy < roi.y0 || yy > roi.y1) continue;
        for (int i = -1; i <= 1; ++i) {
          int xx = x + i;
          if (xx < roi.x0 || xx > roi.x1) continue;
          acc += src(xx, yy);
          ++n;
        }
      }
      img.at(x, y) = acc / n;
    }
  }
}

FlowField compute_flow_impl(const ImageU8& frame_a, const ImageU8& frame_b,
                            const FlowParams& params, const Roi& roi_full,
                            Vec2 init = {0.0, 0.0}) {
  if (!frame_a.same_size(frame_b)) {
    throw InputError("compute_flow: frames must have identical dimensions");
  }
  if (params.window_radius < 1 || params.pyramid_levels < 1) {
    throw InputError("compute_flow: invalid parameters");
  }

  const ImageF a0 = to_float(frame_a);
  const ImageF b0 = to_float(frame_b);
  auto pyr_a = build_pyramid(a0, params.pyramid_levels, params.window_radius);
  auto pyr_b = build_pyramid(b0, params.pyramid_levels, params.window_radius);
  const int levels = static_cast<int>(pyr_a.size());
  const int r = params.window_radius;

  const double top_scale = 1.0 / (1 << (levels - 1));
  ImageD du(pyr_a.back().width(), pyr_a.back().height(), init.x * top_scale);
  ImageD dv(pyr_a.back().width(), pyr_a.back().height(), init.y * top_scale);
  ImageF mineig;   // filled at level 0
  ImageF residual; // mean |It| at level 0

  std::vector<float> ix, iy, prod_xx, prod_xy, prod_yy, prod_xt, prod_yt, abst;
  Sat sat_xx, sat_xy, sat_yy, sat_xt, sat_yt, sat_abst;

  for (int level = levels - 1; level >= 0; --level) {
    const ImageF& a = pyr_a[level];
    const ImageF& b = pyr_b[level];
    const int w = a.width(), h = a.height();
    const Roi roi = level == 0 ? roi_full : roi_full.scaled_down(level, w, h);

    if (du.width() != w) {
      // Upsample flow from the coarser level, doubling its magnitude.
      ImageD ndu(w, h, 0.0), ndv(w, h, 0.0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double sx = std::min(x * 0.5, du.width() - 1.0);
          double sy = std::min(y * 0.5, du.height() - 1.0);
          ndu.at(x, y) = 2.0 * sample_bilinear(du, sx, sy);
          ndv.at(x, y) = 2.0 * sample_bilinear(dv, sx, sy);
        }
      }
      du = std::move(ndu);
      dv = std::move(ndv);
    }

    // Spatial gradients of the source frame (central differences).
    ix.assign(static_cast<std::size_t>(w) * h, 0.f);
    iy.assign(static_cast<std::size_t>(w) * h, 0.f);
    for (int y = 0; y < h; ++y) {
      int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
      for (int x = 0; x < w; ++x) {
        int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
        std::size_t i = static_cast<std::size_t>(y) * w + x;
        ix[i] = 0.5f * (a.at(xp, y) - a.at(xm, y));
        iy[i] = 0.5f * (a.at(x, yp) - a.at(x, ym));
      }
    }
    prod_xx.resize(ix.size());
    prod_xy.resize(ix.size());
    prod_yy.resize(ix.size());
    for (std::size_t i = 0; i < ix.size(); ++i) {
      prod_xx[i] = ix[i] * ix[i];
      prod_xy[i] = ix[i] * iy[i];
      prod_yy[i] = iy[i] * iy[i];
    }
    sat_xx.build(prod_xx, w, h);
    sat_xy.build(prod_xy, w, h);
    sat_yy.build(prod_yy, w, h);

    if (level == 0) {
      mineig = ImageF(w, h, 0.f);
      for (int y = roi.y0; y <= roi.y1; ++y) {
        for (int x = roi.x0; x <= roi.x1; ++x) {
          double n = Sat::box_count(x, y, r, w, h);
          double gxx = sat_xx.box(x, y, r) / n;
          double gxy = sat_xy.box(x, y, r) / n;
          double gyy = sat_yy.box(x, y, r) / n;
          double tr = gxx + gyy;
          double det = std::sqrt(std::max(0.0, (gxx - gyy) * (gxx - gyy) + 4 * gxy * gxy));
          mineig.at(x, y) = static_cast<float>(0.5 * (tr - det));
        }
      }
    }

    prod_xt.assign(ix.size(), 0.f);
    prod_yt.assign(ix.size(), 0.f);
    abst.assign(ix.size(), 0.f);
    for (int iter = 0; iter < params.iterations_per_level; ++iter) {
      for (int y = roi.y0; y <= roi.y1; ++y) {
        for (int x = roi.x0; x <= roi.x1; ++x) {
          std::size_t i = static_cast<std::size_t>(y) * w + x;
          float it = static_cast<float>(
              sample_bilinear(b, x + du.at(x, y), y + dv.at(x, y)) - a.at(x, y));
          prod_xt[i] = ix[i] * it;
          prod_yt[i] = iy[i] * it;
          abst[i] = std::abs(it);
        }
      }
      sat_xt.build(prod_xt, w, h);
      sat_yt.build(prod_yt, w, h);
      for (int y = roi.y0; y <= roi.y1; ++y) {
        for (int x = roi.x0; x <= roi.x1; ++x) {
          double gxx = sat_xx.box(x, y, r);
          double gxy = sat_xy.box(x, y, r);
          double gyy = sat_yy.box(x, y, r);
          double det = gxx * gyy - gxy * gxy;
          if (det <= 1e-12) continue;
          double bx = sat_xt.box(x, y, r);
          double by = sat_yt.box(x, y, r);
          // G d = -b; large steps are distrusted, they bounce between
          // overlapping windows.
          double ddu = std::clamp((-gyy * bx + gxy * by) / det, -2.0, 2.0);
          double ddv = std::clamp((gxy * bx - gxx * by) / det, -2.0, 2.0);
          du.at(x, y) += ddu;
          dv.at(x, y) += ddv;
        }
      }
      // Each pixel's residual is evaluated at its own flow, so neighbouring
      // windows feed back into each other; a light smoothing pass keeps that
      // exchange contractive.
      smooth_in_roi(du, roi);
      smooth_in_roi(dv, roi);
    }
    if (level == 0) {
      sat_abst.build(abst, w, h);
      residual = ImageF(w, h, 0.f);
      for (int y = roi.y0; y <= roi.y1; ++y) {
        for (int x = roi.x0; x <= roi.x1; ++x) {
          double n = Sat::box_count(x, y, r, w, h);
          residual.at(x, y) = static_cast<float>(sat_abst.box(x, y, r) / n);
        }
      }
    }
  }

  const int w = frame_a.width(), h = frame_a.height();
  FlowField out{ImageD(w, h, 0.0), ImageD(w, h, 0.0), Mask(w, h, 0)};
  for (int y = roi_full.y0; y <= roi_full.y1; ++y) {
    for (int x = roi_full.x0; x <= roi_full.x1; ++x) {
      double u = du.at(x, y), v = dv.at(x, y);
      double tx = x + u, ty = y + v;
      bool ok = std::isfinite(u) && std::isfinite(v) &&
                mineig.at(x, y) >= params.min_eigenvalue &&
                residual.at(x, y) <= params.max_residual &&
                tx >= -0.5 && tx <= w - 0.5 && ty >= -0.5 && ty <= h - 0.5;
      if (ok) {
        out.du.at(x, y) = u;
        out.dv.at(x, y) = v;
        out.valid.at(x, y) = 1;
      }
    }
  }
  return out;
}

}  // namespace

FlowField compute_flow(const ImageU8& frame_a, const ImageU8& frame_b,
                       const FlowParams& params) {
  return compute_flow_impl(frame_a, frame_b, params,
                           Roi::full(frame_a.width(), frame_a.height()));
}

std::vector<FlowField> compute_anchor_flows(const FrameSequence& frames,
                                            int anchor_idx, const Mask& mask,
                                            const FlowParams& params,
                                            std::span<const int> targets,
                                            std::span<const Vec2> init_hints) {
  if (anchor_idx < 0 || anchor_idx >= static_cast<int>(frames.frames.size())) {
    throw InputError("anchor index out of range");
  }
  if (mask_area(mask) == 0) throw InputError("empty anchor mask");
  if (!init_hints.empty() && init_hints.size() != targets.size()) {
    throw InputError("init_hints must match targets");
  }

  const ImageU8& anchor = frames.frames[anchor_idx];
  if (!mask.same_size(anchor)) throw InputError("mask/frame size mismatch");

  std::vector<int> all;
  if (targets.empty()) {
    all.resize(frames.frames.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    targets = all;
  }

  // Evaluate on the mask's bounding box inflated by the pyramid's reach.
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  }
  int reach = params.window_radius * (1 << params.pyramid_levels) + 8;
  for (const Vec2& h : init_hints) {
    reach = std::max(reach, static_cast<int>(std::abs(h.x) + std::abs(h.y)) +
                                4 * params.window_radius);
  }
  Roi roi{std::max(0, x0 - reach), std::max(0, y0 - reach),
          std::min(mask.width() - 1, x1 + reach),
          std::min(mask.height() - 1, y1 + reach)};

  std::vector<FlowField> flows;
  flows.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    int idx = targets[i];
    if (idx < 0 || idx >= static_cast<int>(frames.frames.size())) {
      throw InputError("anchor flow target out of range");
    }
    Vec2 init = init_hints.empty() ? Vec2{0.0, 0.0} : init_hints[i];
    flows.push_back(compute_flow_impl(anchor, frames.frames[idx], params, roi, init));
  }
  return flows;
}

namespace {

Mask erode3x3(const Mask& m) {
  Mask out(m.width(), m.height(), 0);
  for (int y = 1; y < m.height() - 1; ++y) {
    for (int x = 1; x < m.width() - 1; ++x) {
      bool keep = true;
      for (int j = -1; j <= 1 && keep; ++j) {
        for (int i = -1; i <= 1; ++i) {
          if (!m.at(x + i, y + j)) {
            keep = false;
            break;
          }
        }
      }
      out.at(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

std::vector<MotionComponent> components_of(const Mask& moving, int min_area) {
  const int w = moving.width(), h = moving.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<MotionComponent> comps;

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      std::size_t si = static_cast<std::size_t>(sy) * w + sx;
      if (!moving.data()[si] || label[si] != -1) continue;
      // BFS flood fill, 8-connected.
      int id = static_cast<int>(comps.size());
      MotionComponent comp{Mask(w, h, 0), {0, 0}, 0};
      std::queue<std::pair<int, int>> q;
      q.emplace(sx, sy);
      label[si] = id;
      double cx = 0, cy = 0;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        comp.mask.at(x, y) = 1;
        ++comp.area;
        cx += x;
        cy += y;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (moving.data()[ni] && label[ni] == -1) {
              label[ni] = id;
              q.emplace(nx, ny);
            }
          }
        }
      }
      comp.centroid = {cx / comp.area, cy / comp.area};
      comps.push_back(std::move(comp));
    }
  }
  std::erase_if(comps, [&](const MotionComponent& c) { return c.area < min_area; });
  std::sort(comps.begin(), comps.end(),
            [](const MotionComponent& a, const MotionComponent& b) {
              return a.area > b.area;
            });
  return comps;
}

Mask threshold_moving(const FlowField& flow, double magnitude_threshold) {
  Mask m(flow.du.width(), flow.du.height(), 0);
  const double t2 = magnitude_threshold * magnitude_threshold;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!flow.valid.at(x, y)) continue;
      double u = flow.du.at(x, y), v = flow.dv.at(x, y);
      if (u * u + v * v > t2) m.at(x, y) = 1;
    }
  }
  return m;
}

// The window of the flow solver smears object motion a few pixels into the
// background. Re-thresholding against the component's own median magnitude
// plus one erosion trims that fringe back to the object support.
std::vector<MotionComponent> refine_components(const FlowField& flow,
                                               std::vector<MotionComponent> comps,
                                               double magnitude_threshold,
                                               int min_area) {
  std::vector<MotionComponent> out;
  for (auto& comp : comps) {
    std::vector<double> mags;
    for (int y = 0; y < comp.mask.height(); ++y) {
      for (int x = 0; x < comp.mask.width(); ++x) {
        if (!comp.mask.at(x, y)) continue;
        mags.push_back(std::hypot(flow.du.at(x, y), flow.dv.at(x, y)));
      }
    }
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    double rethr = std::max(magnitude_threshold, 0.55 * mags[mags.size() / 2]);
    Mask refined(comp.mask.width(), comp.mask.height(), 0);
    for (int y = 0; y < refined.height(); ++y) {
      for (int x = 0; x < refined.width(); ++x) {
        if (!comp.mask.at(x, y)) continue;
        if (std::hypot(flow.du.at(x, y), flow.dv.at(x, y)) >= rethr) {
          refined.at(x, y) = 1;
        }
      }
    }
    refined = erode3x3(refined);
    // Erosion can split the support; keep its largest piece.
    auto sub = components_of(refined, min_area);
    if (!sub.empty()) out.push_back(std::move(sub.front()));
  }
  std::sort(out.begin(), out.end(),
            [](const MotionComponent& a, const MotionComponent& b) {
              return a.area > b.area;
            });
  return out;
}

}  // namespace

Mask moving_mask(const FlowField& flow, double magnitude_threshold) {
  auto comps = moving_components(flow, magnitude_threshold, 1);
  if (comps.empty()) return Mask(flow.du.width(), flow.du.height(), 0);
  return comps.front().mask;
}

std::vector<MotionComponent> moving_components(const FlowField& flow,
                                               double magnitude_threshold,
                                               int min_area) {
  auto raw = components_of(threshold_moving(flow, magnitude_threshold),
                           std::max(1, min_area / 2));
  return refine_components(flow, std::move(raw), magnitude_threshold, min_area);
}

}  // namespace ftb
