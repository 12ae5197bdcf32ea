#include "ftb/audio_event.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "ftb/error.hpp"

namespace ftb {

HighlightedClip build_highlighted_clip(const AudioClip& audio, double t_video_s) {
  if (audio.samples.empty()) throw InputError("empty audio clip");
  const std::int64_t n = static_cast<std::int64_t>(audio.samples.size());

  // Map the video timestamp into the audio clock of this clip.
  const double t_in_audio = t_video_s - audio.clock_offset_s;
  const std::int64_t centre =
      static_cast<std::int64_t>(std::lround(t_in_audio * audio.sample_rate));

  HighlightedClip clip;
  clip.sample_rate = audio.sample_rate;
  clip.base_sample_index = centre - HighlightedClip::kHighlightPos;
  clip.samples.assign(HighlightedClip::kLength, 0.0f);
  clip.highlight.assign(HighlightedClip::kLength, 0);
  if (clip.base_sample_index >= n ||
      clip.base_sample_index + HighlightedClip::kLength <= 0) {
    throw InputError("highlighted window lies outside the recording");
  }
  for (int i = 0; i < HighlightedClip::kLength; ++i) {
    std::int64_t k = clip.base_sample_index + i;
    if (k < 0) {
      clip.clipped_start = true;
    } else if (k >= n) {
      clip.clipped_end = true;
    } else {
      clip.samples[i] = audio.samples[static_cast<std::size_t>(k)];
    }
  }
  const int h0 = HighlightedClip::kHighlightPos - HighlightedClip::kHighlight / 2;
  for (int i = 0; i < HighlightedClip::kHighlight; ++i) {
    clip.highlight[h0 + i] = 1;
  }
  return clip;
}

namespace {

// Squared-sample moving average (trailing window).
std::vector<double> energy_envelope(std::span<const float> samples, int window) {
  std::vector<double> env(samples.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double x = samples[i];
    acc += x * x;
    if (i >= static_cast<std::size_t>(window)) {
      double x0 = samples[i - window];
      acc -= x0 * x0;
    }
    env[i] = acc / window;
  }
  return env;
}

double median_inplace(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

AudioOnset locate_in(std::span<const float> samples, int sample_rate,
                     std::int64_t abs_offset, std::int64_t s0, std::int64_t s1,
                     const OnsetParams& params) {
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  s0 = std::clamp<std::int64_t>(s0, 0, n);
  s1 = std::clamp<std::int64_t>(s1, 0, n);
  if (s1 <= s0) throw InputError("locate_onset: empty search region");

  const int win = std::max(1, static_cast<int>(std::lround(
                                  params.smooth_ms * 1e-3 * sample_rate)));
  auto env = energy_envelope(samples, win);

  double peak = 0.0;
  std::int64_t peak_at = s0;
  for (std::int64_t i = s0; i < s1; ++i) {
    if (env[i] > peak) {
      peak = env[i];
      peak_at = i;
    }
  }
  double med = median_inplace(std::vector<double>(env.begin() + s0, env.begin() + s1));
  if (peak < params.min_peak || peak < params.peak_median_mult * med) {
    throw NoOnsetError("no onset: envelope peak indistinguishable from the floor");
  }

  const double thr_hi = params.alpha * peak;
  std::int64_t hi = -1;
  for (std::int64_t i = s0; i <= peak_at; ++i) {
    if (env[i] >= thr_hi) {
      hi = i;
      break;
    }
  }
  if (hi < 0) throw NoOnsetError("no onset: threshold never crossed");

  // Noise floor from the region before the crossing, then backtrack to it.
  double pre_med =
      hi > s0 ? median_inplace(std::vector<double>(env.begin() + s0, env.begin() + hi))
              : 0.0;
  double floor_level = std::max(params.floor_rel * peak, params.floor_mult * pre_med);
  std::int64_t onset = s0;
  for (std::int64_t i = hi; i >= s0; --i) {
    if (env[i] <= floor_level) {
      onset = i + 1;
      break;
    }
  }

  AudioOnset out;
  out.onset_sample = abs_offset + onset;
  out.t_audio = static_cast<double>(out.onset_sample) / sample_rate;
  out.confidence = peak / std::max(floor_level, params.min_peak);
  return out;
}

}  // namespace

AudioOnset locate_onset(const AudioClip& audio, std::int64_t search_start,
                        std::int64_t search_end, const OnsetParams& params) {
  return locate_in(audio.samples, audio.sample_rate, 0, search_start, search_end,
                   params);
}

AudioOnset locate_onset(const HighlightedClip& clip, const OnsetParams& params) {
  return locate_in(clip.samples, clip.sample_rate, clip.base_sample_index, 0,
                   static_cast<std::int64_t>(clip.samples.size()), params);
}

}  // namespace ftb
