#include "ftb/av_correspondence.hpp"

#include <algorithm>
#include <cmath>

#include "ftb/error.hpp"

namespace ftb {

std::vector<AudioImpactWindow> detect_audio_impacts(const AudioClip& audio,
                                                    const AudioImpactParams& params) {
  if (audio.samples.empty()) throw InputError("detect_audio_impacts: empty clip");
  const int fs = audio.sample_rate;
  const int hop = std::max(1, static_cast<int>(std::lround(params.hop_ms * 1e-3 * fs)));
  const std::int64_t n = static_cast<std::int64_t>(audio.samples.size());
  const std::int64_t n_frames = n / hop;
  if (n_frames == 0) return {};

  // Short-time energy, 1 ms non-overlapping blocks.
  std::vector<double> env(n_frames, 0.0);
  for (std::int64_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (int i = 0; i < hop; ++i) {
      double x = audio.samples[f * hop + i];
      acc += x * x;
    }
    env[f] = acc / hop;
  }
  std::vector<double> sorted_env = env;
  std::nth_element(sorted_env.begin(), sorted_env.begin() + sorted_env.size() / 2,
                   sorted_env.end());
  const double med = sorted_env[sorted_env.size() / 2];
  const double thr = std::max(params.peak_mult * med, 1e-12);

  const std::int64_t half_window =
      static_cast<std::int64_t>(std::lround(params.window_ms * 1e-3 * fs / 2.0));
  const std::int64_t min_sep_frames =
      static_cast<std::int64_t>(std::lround(params.min_separation_ms / params.hop_ms));

  std::vector<AudioImpactWindow> events;
  std::int64_t f = 0;
  std::int64_t next_allowed = 0;
  while (f < n_frames) {
    if (env[f] <= thr || f < next_allowed) {
      ++f;
      continue;
    }
    // First crossing of this impact; the window is centred here.
    const std::int64_t crossing = f * hop;
    AudioImpactWindow w;
    w.start_sample = std::max<std::int64_t>(0, crossing - half_window);
    w.end_sample = std::min(n, crossing + half_window);
    w.onset_t_s = static_cast<double>(crossing) / fs;
    w.peak_sample = w.start_sample;
    for (std::int64_t k = w.start_sample; k < w.end_sample; ++k) {
      double p = static_cast<double>(audio.samples[k]) * audio.samples[k];
      if (p > w.peak_energy) {
        w.peak_energy = p;
        w.peak_sample = k;
      }
    }
    events.push_back(w);
    next_allowed = f + min_sep_frames;
    f = next_allowed;
  }
  return events;
}

namespace {

struct ComponentTrack {
  int first_pair = 0;          // strided pair index of centroid[0]
  std::vector<Vec2> centroid;  // one per consecutive strided pair
  std::vector<Mask> masks;
  bool closed = false;
  bool vanished = false;  // closed because its component disappeared mid-stream
};

bool mask_touches_border(const Mask& m, int margin) {
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      if (x < margin || y < margin || x >= m.width() - margin ||
          y >= m.height() - margin) {
        return true;
      }
    }
  }
  return false;
}

double median_scalar(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

std::vector<MotionEventWindow> detect_motion_events(const FrameSequence& frames,
                                                    const FlowParams& flow_params,
                                                    const MotionEventParams& params) {
  const int n = static_cast<int>(frames.frames.size());
  if (n < 3) throw InputError("detect_motion_events: need at least 3 frames");

  const int stride =
      std::max(1, static_cast<int>(std::lround(frames.fps / params.target_fps)));
  std::vector<int> strided;
  for (int i = 0; i < n; i += stride) strided.push_back(i);
  if (strided.size() < 6) {
    strided.clear();
    for (int i = 0; i < n; ++i) strided.push_back(i);
  }
  const int n_strided = static_cast<int>(strided.size());

  // Associate moving components across consecutive strided pairs into tracks.
  // A track is kept strictly contiguous: one missed association closes it.
  std::vector<ComponentTrack> tracks;
  for (int p = 0; p + 1 < n_strided; ++p) {
    FlowField flow = compute_flow(frames.frames[strided[p]],
                                  frames.frames[strided[p + 1]], flow_params);
    auto comps = moving_components(flow, params.moving_threshold_px,
                                   params.min_component_area);
    std::vector<bool> used(comps.size(), false);
    for (auto& track : tracks) {
      if (track.closed) continue;
      if (track.first_pair + static_cast<int>(track.centroid.size()) != p) {
        track.closed = true;
        continue;
      }
      int best = -1;
      double best_d = params.association_gate_px;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (used[c]) continue;
        double d = (comps[c].centroid - track.centroid.back()).norm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (best >= 0) {
        used[best] = true;
        track.centroid.push_back(comps[best].centroid);
        track.masks.push_back(std::move(comps[best].mask));
      } else {
        track.closed = true;
        track.vanished = true;
      }
    }
    for (std::size_t c = 0; c < comps.size(); ++c) {
      if (used[c]) continue;
      ComponentTrack t;
      t.first_pair = p;
      t.centroid.push_back(comps[c].centroid);
      t.masks.push_back(std::move(comps[c].mask));
      tracks.push_back(std::move(t));
    }
  }

  std::vector<MotionEventWindow> events;
  for (const auto& track : tracks) {
    const int m = static_cast<int>(track.centroid.size());

    // An object that stops dead leaves no moving component after the impact:
    // the track terminates mid-sequence while still inside the frame, at
    // speed. A rebound apex also stalls a track, but only after decelerating,
    // so the terminal velocity must still be near the track's maximum.
    bool stop_candidate = false;
    if (track.vanished && m >= 4 && !mask_touches_border(track.masks[m - 1], 4)) {
      double v_last = (track.centroid[m - 1] - track.centroid[m - 2]).norm();
      double v_max = 0.0;
      for (int i = 1; i < m; ++i) {
        v_max = std::max(v_max, (track.centroid[i] - track.centroid[i - 1]).norm());
      }
      stop_candidate = v_last >= std::max(4.0, 0.6 * v_max);
    }

    const std::size_t events_before = events.size();
    if (m >= 5) {
      // Finite differences over the strided centroid sequence; units are px
      // per strided frame.
      std::vector<Vec2> v(m), a(m), da(m);
      for (int i = 1; i < m; ++i) v[i] = track.centroid[i] - track.centroid[i - 1];
      for (int i = 2; i < m; ++i) a[i] = v[i] - v[i - 1];
      for (int i = 3; i < m; ++i) da[i] = a[i] - a[i - 1];

      std::vector<double> da_mag;
      for (int i = 3; i < m; ++i) da_mag.push_back(da[i].norm());
      double med = median_scalar(da_mag);
      double gate = std::max(params.noise_mult * med, params.min_abs_change);

      std::vector<double> axs, ays;
      for (int j = 2; j < m; ++j) {
        axs.push_back(a[j].x);
        ays.push_back(a[j].y);
      }
      const double med_ax = median_scalar(axs), med_ay = median_scalar(ays);
      auto anomaly = [&](int j) {
        return std::hypot(a[j].x - med_ax, a[j].y - med_ay);
      };

      // Group above-gate acceleration changes into events. A single impact
      // perturbs up to three consecutive delta-a values and the middle one
      // can dip under the gate, so clusters closer than 3 samples are merged.
      std::vector<std::pair<int, int>> groups;
      for (int i = 3; i < m; ++i) {
        if (da[i].norm() <= gate) continue;
        if (!groups.empty() && i - groups.back().second <= 3) {
          groups.back().second = i;
        } else {
          groups.emplace_back(i, i);
        }
      }
      for (auto [g0, g1] : groups) {
        // Locate the transition inside the group via the adjacent-acceleration
        // anomaly pair (phase-robust, unlike the single argmax).
        int lo = std::max(2, g0 - 2), hi = std::min(m - 2, g1);
        int best = lo;
        double best_score = -1.0;
        for (int j = lo; j <= hi; ++j) {
          double score = anomaly(j) + anomaly(j + 1);
          if (score > best_score + 1e-12) {
            best_score = score;
            best = j;
          }
        }
        int e_pos = std::max(1, best - 1);  // last clean pre-collision position

        // centroid[p] sits at strided frame (first_pair + p); the collision
        // lies in the following strided interval. Pad one strided frame each
        // side.
        const int si_e = track.first_pair + e_pos;
        MotionEventWindow w;
        w.first_frame = strided[std::max(0, si_e - 1)];
        w.last_frame = strided[std::min(n_strided - 1, si_e + 2)];
        w.mask_frame = strided[std::min(n_strided - 1, si_e)];
        w.mask = track.masks[e_pos];
        double peak = 0.0;
        for (int j = g0; j <= g1; ++j) peak = std::max(peak, da[j].norm());
        w.peak_accel_change = peak;
        events.push_back(std::move(w));
      }
    }

    if (stop_candidate && events.size() == events_before) {
      const int si_e = track.first_pair + m - 1;
      MotionEventWindow w;
      w.first_frame = strided[std::max(0, si_e - 1)];
      w.last_frame = strided[std::min(n_strided - 1, si_e + 2)];
      w.mask_frame = strided[std::min(n_strided - 1, si_e)];
      w.mask = track.masks[m - 1];
      w.peak_accel_change = (track.centroid[m - 1] - track.centroid[m - 2]).norm();
      events.push_back(std::move(w));
    }
  }
  std::sort(events.begin(), events.end(),
            [](const MotionEventWindow& a, const MotionEventWindow& b) {
              return a.first_frame < b.first_frame;
            });
  return events;
}

PairingResult pair_events(const std::vector<AudioImpactWindow>& audio_events,
                          const std::vector<MotionEventWindow>& motion_events,
                          double fps, int sample_rate, const PairingParams& params) {
  PairingResult out;
  std::vector<bool> audio_used(audio_events.size(), false);

  // Both inputs are time sorted; greedy earliest-first one-to-one matching.
  for (const auto& motion : motion_events) {
    const double t_first = (motion.first_frame - params.tolerance_frames) / fps;
    const double t_last =
        (motion.last_frame + params.tolerance_frames) / fps + params.max_acoustic_lag_s;
    int chosen = -1;
    for (std::size_t i = 0; i < audio_events.size(); ++i) {
      if (audio_used[i]) continue;
      double onset = audio_events[i].onset_t_s;
      if (onset >= t_first && onset <= t_last) {
        chosen = static_cast<int>(i);
        break;
      }
    }
    if (chosen < 0) {
      out.unmatched_motion.push_back(motion);
      continue;
    }
    audio_used[chosen] = true;
    const auto& aw = audio_events[chosen];
    double a0 = static_cast<double>(aw.start_sample) / sample_rate;
    double a1 = static_cast<double>(aw.end_sample) / sample_rate;
    double ov = std::min(a1, t_last) - std::max(a0, t_first);
    AVEventPair pair;
    pair.audio = aw;
    pair.motion = motion;
    pair.pairing_score = a1 > a0 ? std::clamp(ov / (a1 - a0), 0.0, 1.0) : 0.0;
    out.pairs.push_back(std::move(pair));
  }
  for (std::size_t i = 0; i < audio_events.size(); ++i) {
    if (!audio_used[i]) out.unmatched_audio.push_back(audio_events[i]);
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const AVEventPair& a, const AVEventPair& b) {
              return a.audio.onset_t_s < b.audio.onset_t_s;
            });
  return out;
}

}  // namespace ftb
