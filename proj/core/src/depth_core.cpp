#include "ftb/depth_core.hpp"

#include <cmath>
#include <string>

#include "ftb/error.hpp"

namespace ftb {

double depth_from_delay(double T_s, const PropagationConstants& consts) {
  if (!(T_s > 0)) {
    throw NegativeDelayError("delay must be positive (mis-paired events?)");
  }
  return consts.c_light * consts.v_sound * T_s / (consts.c_light - consts.v_sound);
}

double depth_from_delay_approx(double T_s, const PropagationConstants& consts) {
  if (!(T_s > 0)) {
    throw NegativeDelayError("delay must be positive (mis-paired events?)");
  }
  return consts.v_sound * T_s;
}

DepthEstimate estimate_depth(double t_audio, double t_video,
                             const CalibrationModel& model,
                             const PropagationConstants& consts) {
  DepthEstimate est;
  est.t_audio = t_audio;
  est.t_video = t_video;
  est.t_hw_used = model.t_hw_s;
  est.T_s = t_audio - t_video + model.t_hw_s;
  PropagationConstants used = consts;
  if (model.v_eff) used.v_sound = *model.v_eff;
  if (!(est.T_s > 0)) {
    throw NegativeDelayError("negative delay for pair (t_audio=" +
                             std::to_string(t_audio) +
                             ", t_video=" + std::to_string(t_video) + ")");
  }
  est.depth_m = depth_from_delay(est.T_s, used);
  return est;
}

CalibrationModel calibrate(std::span<const CalibrationSample> samples, bool fit_v,
                           const PropagationConstants& consts) {
  const int n = static_cast<int>(samples.size());
  if (n < 2 || (fit_v && n < 3)) {
    throw CalibrationError("not enough calibration samples");
  }

  CalibrationModel model;
  if (!fit_v) {
    // t_hw = mean of d (1/v - 1/c) - (t_audio - t_video).
    const double slope = 1.0 / consts.v_sound - 1.0 / consts.c_light;
    double acc = 0.0;
    for (const auto& s : samples) {
      acc += s.depth_m * slope - (s.t_audio - s.t_video);
    }
    model.t_hw_s = acc / n;
    double rss = 0.0;
    for (const auto& s : samples) {
      double r = (s.t_audio - s.t_video) + model.t_hw_s - s.depth_m * slope;
      rss += r * r;
    }
    model.residual_ms = std::sqrt(rss / n) * 1e3;
    return model;
  }

  // Regress tau = t_audio - t_video on depth: tau = d * slope - t_hw with
  // slope = 1/v_eff - 1/c.
  double sd = 0, st = 0, sdd = 0, sdt = 0;
  for (const auto& s : samples) {
    double tau = s.t_audio - s.t_video;
    sd += s.depth_m;
    st += tau;
    sdd += s.depth_m * s.depth_m;
    sdt += s.depth_m * tau;
  }
  const double denom = n * sdd - sd * sd;
  if (std::abs(denom) < 1e-12 * std::max(1.0, sdd * n)) {
    throw CalibrationError("calibration depths are rank deficient (all equal?)");
  }
  const double slope = (n * sdt - sd * st) / denom;
  const double intercept = (st - slope * sd) / n;
  model.t_hw_s = -intercept;
  const double inv_v = slope + 1.0 / consts.c_light;
  if (!(inv_v > 0)) {
    throw CalibrationError("fitted sound speed is non-physical");
  }
  const double v_eff = 1.0 / inv_v;
  if (v_eff < 320.0 || v_eff > 360.0) {
    throw CalibrationError("fitted sound speed " + std::to_string(v_eff) +
                           " m/s outside the plausible range [320, 360]");
  }
  model.v_eff = v_eff;
  double rss = 0.0;
  for (const auto& s : samples) {
    double r = (s.t_audio - s.t_video) - (s.depth_m * slope + intercept);
    rss += r * r;
  }
  model.residual_ms = std::sqrt(rss / n) * 1e3;
  return model;
}

}  // namespace ftb
