#pragma once

#include <span>
#include <vector>

#include "ftb/image.hpp"
#include "ftb/scene_sim.hpp"

namespace ftb {

// Per-pixel displacement from the source frame into the target frame:
// target(p + (du, dv)) ~ source(p). Invalid pixels carry displacement 0.
struct FlowField {
  ImageD du;
  ImageD dv;
  Mask valid;
};

struct FlowParams {
  int window_radius = 7;
  int pyramid_levels = 3;
  int iterations_per_level = 5;
  double min_eigenvalue = 1e-3;  // structure tensor gate, intensities in [0,1]
  double max_residual = 0.12;    // mean |warped difference| gate, [0,1] units
};

FlowField compute_flow(const ImageU8& frame_a, const ImageU8& frame_b,
                       const FlowParams& params);

// Flow from one anchor frame directly to each requested target frame (never
// chained frame to frame), densely evaluated but gated to the given mask's
// neighbourhood. Empty `targets` means every frame in the sequence.
// `init_hints`, when given (one per target), seeds the solve with an expected
// displacement, extending the reach beyond the pyramid for fast motion; each
// target remains independent of the other targets.
std::vector<FlowField> compute_anchor_flows(const FrameSequence& frames,
                                            int anchor_idx, const Mask& mask,
                                            const FlowParams& params,
                                            std::span<const int> targets = {},
                                            std::span<const Vec2> init_hints = {});

// Valid pixels whose displacement magnitude exceeds the threshold, reduced to
// the largest connected component.
Mask moving_mask(const FlowField& flow, double magnitude_threshold);

struct MotionComponent {
  Mask mask;
  Vec2 centroid;
  int area = 0;
};

// All moving components of at least min_area pixels, largest first.
std::vector<MotionComponent> moving_components(const FlowField& flow,
                                               double magnitude_threshold,
                                               int min_area = 12);

// Debug dump: <stem>_du.pgm / <stem>_dv.pgm with displacements offset-encoded
// around gray 128, plus <stem>_flow.json describing the encoding.
void write_flow_debug(const FlowField& flow, const std::filesystem::path& dir,
                      const std::string& stem, double px_per_level = 0.1);

}  // namespace ftb
