#pragma once

#include <cstdint>
#include <vector>

#include "ftb/scene_sim.hpp"

namespace ftb {

// Audio input representation for onset work: a short window of samples with
// a contiguous run of "highlighted" samples marking the video-derived
// timestamp mapped into the audio clock.
struct HighlightedClip {
  static constexpr int kLength = 1600;
  static constexpr int kHighlight = 24;
  static constexpr int kHighlightPos = 400;  // highlight centre within the clip

  std::vector<float> samples;          // exactly kLength
  std::vector<std::uint8_t> highlight; // exactly kHighlight ones, contiguous
  std::int64_t base_sample_index = 0;  // absolute index of samples[0]
  int sample_rate = 0;
  bool clipped_start = false;  // window ran past the recording start (zero padded)
  bool clipped_end = false;
};

HighlightedClip build_highlighted_clip(const AudioClip& audio, double t_video_s);

struct AudioOnset {
  double t_audio = 0.0;            // seconds, audio clock
  std::int64_t onset_sample = 0;   // absolute sample index
  double confidence = 0.0;         // envelope peak / noise floor
};

struct OnsetParams {
  double alpha = 0.1;            // high threshold as a fraction of the local peak
  double smooth_ms = 0.5;        // energy envelope moving-average span
  double floor_rel = 1e-4;       // relative noise floor for noiseless recordings
  double floor_mult = 4.0;       // noise floor as multiple of the pre-onset median
  double peak_median_mult = 6.0; // peak must clear this multiple of the median
  double min_peak = 1e-18;       // silence gate
};

// First impact onset inside [search_start, search_end): the smoothed energy
// envelope is traced back from its alpha * peak crossing to the preceding
// noise-floor crossing.
AudioOnset locate_onset(const AudioClip& audio, std::int64_t search_start,
                        std::int64_t search_end, const OnsetParams& params = {});

AudioOnset locate_onset(const HighlightedClip& clip, const OnsetParams& params = {});

}  // namespace ftb
