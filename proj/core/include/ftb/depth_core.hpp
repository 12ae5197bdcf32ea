#pragma once

#include <optional>
#include <span>

namespace ftb {

struct PropagationConstants {
  double v_sound = 343.0;   // m/s
  double c_light = 2.998e8; // m/s
};

// Depth from the sound/light time-of-flight difference T:
//   d/v - d/c = T  =>  d = c v T / (c - v).
double depth_from_delay(double T_s, const PropagationConstants& consts = {});

// The d ~ v T shortcut; differs from the exact form by a relative v/c.
double depth_from_delay_approx(double T_s, const PropagationConstants& consts = {});

struct CalibrationModel {
  double t_hw_s = 0.0;             // audio/video recorder start offset
  std::optional<double> v_eff;     // fitted effective sound speed
  double residual_ms = 0.0;        // rms regression residual
};

struct DepthEstimate {
  double depth_m = 0.0;
  double T_s = 0.0;       // total delay fed into the closed form
  double t_audio = 0.0;
  double t_video = 0.0;
  double t_hw_used = 0.0;
};

DepthEstimate estimate_depth(double t_audio, double t_video,
                             const CalibrationModel& model,
                             const PropagationConstants& consts = {});

struct CalibrationSample {
  double t_audio = 0.0;
  double t_video = 0.0;
  double depth_m = 0.0;  // ground truth
};

// Least squares on d (1/v - 1/c) = (t_audio - t_video) + t_hw. With fit_v the
// slope 1/v_eff is regressed jointly with the intercept.
CalibrationModel calibrate(std::span<const CalibrationSample> samples, bool fit_v,
                           const PropagationConstants& consts = {});

}  // namespace ftb
