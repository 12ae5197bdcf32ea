#include "ftb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ftb/error.hpp"
#include "json.hpp"

namespace ftb {

namespace {

using nlohmann::json;

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double pos = q * (sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Aggregate aggregate_of(std::vector<double> values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) return a;
  std::sort(values.begin(), values.end());
  a.median = quantile_sorted(values, 0.5);
  a.p25 = quantile_sorted(values, 0.25);
  a.p75 = quantile_sorted(values, 0.75);
  return a;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

json aggregate_to_json(const Aggregate& a) {
  return json{{"median", a.median}, {"p25", a.p25}, {"p75", a.p75}, {"count", a.count}};
}

}  // namespace

std::string depth_bucket(double depth_m) {
  if (depth_m < 10.0) return "<10";
  if (depth_m <= 30.0) return "10-30";
  return ">30";
}

MetricsReport build_metrics(const std::vector<SceneRunResult>& results,
                            const std::filesystem::path& dataset_dir) {
  MetricsReport report;

  int max_fps = 0;
  for (const auto& r : results) max_fps = std::max(max_fps, r.fps);

  std::map<int, std::vector<double>> err_by_fps, rel_by_fps;
  std::map<std::string, std::vector<double>> err_by_bucket, rel_by_bucket;

  // Deterministic order regardless of how the batch was parallelized.
  std::vector<const SceneRunResult*> ordered;
  for (const auto& r : results) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const SceneRunResult* a, const SceneRunResult* b) {
              return std::tie(a->scene_id, a->fps) < std::tie(b->scene_id, b->fps);
            });

  for (const SceneRunResult* rp : ordered) {
    const SceneRunResult& r = *rp;
    SceneTruth truth = load_truth(dataset_dir / r.scene_id);

    // Ground-truth collisions and "ok" results are both time ordered; pair
    // them off in order.
    std::vector<const CollisionResult*> ok;
    for (const auto& c : r.collisions) {
      if (c.status == "ok") ok.push_back(&c);
    }
    std::sort(ok.begin(), ok.end(), [](const CollisionResult* a,
                                       const CollisionResult* b) {
      return a->t_video < b->t_video;
    });

    for (std::size_t i = 0; i < truth.collisions.size(); ++i) {
      MetricsRow row;
      row.scene_id = r.scene_id;
      row.collision_index = static_cast<int>(i);
      row.fps = r.fps;
      row.depth_gt = truth.collisions[i].depth_m;
      row.bucket = depth_bucket(row.depth_gt);
      if (i < ok.size()) {
        const CollisionResult& c = *ok[i];
        row.depth_est = c.depth_est;
        row.abs_err = std::abs(row.depth_gt - row.depth_est);
        row.abs_rel = row.abs_err / row.depth_gt;
        row.status = "ok";
        ++report.ok_count;
        err_by_fps[r.fps].push_back(row.abs_err);
        rel_by_fps[r.fps].push_back(row.abs_rel);
        if (r.fps == max_fps) {
          err_by_bucket[row.bucket].push_back(row.abs_err);
          rel_by_bucket[row.bucket].push_back(row.abs_rel);
        }
      } else {
        row.depth_est = std::nan("");
        row.abs_err = std::nan("");
        row.abs_rel = std::nan("");
        row.status = r.status != "ok" ? r.status : "missed";
        ++report.failure_counts[row.status];
      }
      report.rows.push_back(std::move(row));
    }
  }

  for (auto& [fps, v] : err_by_fps) report.abs_err_by_fps[fps] = aggregate_of(v);
  for (auto& [fps, v] : rel_by_fps) report.abs_rel_by_fps[fps] = aggregate_of(v);
  for (auto& [b, v] : err_by_bucket) report.abs_err_by_bucket[b] = aggregate_of(v);
  for (auto& [b, v] : rel_by_bucket) report.abs_rel_by_bucket[b] = aggregate_of(v);
  return report;
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::string out = "scene_id,collision_index,fps,bucket,depth_gt,depth_est,abs_err,abs_rel,status\n";
  for (const auto& row : report.rows) {
    out += row.scene_id + "," + std::to_string(row.collision_index) + "," +
           std::to_string(row.fps) + "," + row.bucket + "," + fmt_double(row.depth_gt) +
           "," + fmt_double(row.depth_est) + "," + fmt_double(row.abs_err) + "," +
           fmt_double(row.abs_rel) + "," + row.status + "\n";
  }
  return out;
}

std::string metrics_to_json(const MetricsReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"scene_id", row.scene_id},
                    {"collision_index", row.collision_index},
                    {"fps", row.fps},
                    {"bucket", row.bucket},
                    {"depth_gt", row.depth_gt},
                    {"depth_est", std::isfinite(row.depth_est) ? json(row.depth_est)
                                                               : json(nullptr)},
                    {"abs_err", std::isfinite(row.abs_err) ? json(row.abs_err)
                                                           : json(nullptr)},
                    {"abs_rel", std::isfinite(row.abs_rel) ? json(row.abs_rel)
                                                           : json(nullptr)},
                    {"status", row.status}});
  }
  json by_fps = json::object();
  for (const auto& [fps, a] : report.abs_err_by_fps) {
    by_fps[std::to_string(fps)] = {{"abs_err", aggregate_to_json(a)},
                                   {"abs_rel",
                                    aggregate_to_json(report.abs_rel_by_fps.at(fps))}};
  }
  json by_bucket = json::object();
  for (const auto& [b, a] : report.abs_err_by_bucket) {
    by_bucket[b] = {{"abs_err", aggregate_to_json(a)},
                    {"abs_rel", aggregate_to_json(report.abs_rel_by_bucket.at(b))}};
  }
  json failures = json::object();
  for (const auto& [status, count] : report.failure_counts) failures[status] = count;
  json j{{"format_version", 1},
         {"rows", rows},
         {"aggregates_by_fps", by_fps},
         {"aggregates_by_bucket", by_bucket},
         {"ok_count", report.ok_count},
         {"failures", failures}};
  return j.dump(2) + "\n";
}

FpsConsistencyReport fps_consistency_report(
    const std::vector<SceneRunResult>& results, int baseline_fps) {
  FpsConsistencyReport report;
  report.baseline_fps = baseline_fps;

  // First ok collision's t_video per (scene, fps).
  std::map<std::string, std::map<int, double>> t_video;
  for (const auto& r : results) {
    for (const auto& c : r.collisions) {
      if (c.status == "ok") {
        auto& per_scene = t_video[r.scene_id];
        if (!per_scene.count(r.fps)) per_scene[r.fps] = c.t_video;
      }
    }
  }

  std::map<int, std::vector<double>> errors, ratios;
  for (const auto& [scene_id, per_fps] : t_video) {
    auto base = per_fps.find(baseline_fps);
    if (base == per_fps.end()) continue;
    for (const auto& [fps, tv] : per_fps) {
      if (fps == baseline_fps) continue;  // degenerate self comparison
      double err = std::abs(tv - base->second);
      if (err < 1e-12) {
        ++report.degenerate_count[fps];
        continue;
      }
      FpsConsistencyReport::Row row;
      row.scene_id = scene_id;
      row.fps = fps;
      row.temporal_error_s = err;
      row.improvement_ratio = (1.0 / fps) / err;
      errors[fps].push_back(err);
      ratios[fps].push_back(row.improvement_ratio);
      report.rows.push_back(std::move(row));
    }
  }
  for (auto& [fps, v] : errors) report.median_error_s[fps] = aggregate_of(v).median;
  for (auto& [fps, v] : ratios) report.median_ratio[fps] = aggregate_of(v).median;
  return report;
}

std::string fps_report_to_csv(const FpsConsistencyReport& report) {
  std::string out = "scene_id,fps,temporal_error_s,improvement_ratio\n";
  for (const auto& row : report.rows) {
    out += row.scene_id + "," + std::to_string(row.fps) + "," +
           fmt_double(row.temporal_error_s) + "," + fmt_double(row.improvement_ratio) +
           "\n";
  }
  return out;
}

std::string fps_report_to_json(const FpsConsistencyReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"scene_id", row.scene_id},
                    {"fps", row.fps},
                    {"temporal_error_s", row.temporal_error_s},
                    {"improvement_ratio", row.improvement_ratio}});
  }
  json med_err = json::object(), med_ratio = json::object(), degen = json::object();
  for (const auto& [fps, v] : report.median_error_s) med_err[std::to_string(fps)] = v;
  for (const auto& [fps, v] : report.median_ratio) med_ratio[std::to_string(fps)] = v;
  for (const auto& [fps, v] : report.degenerate_count) degen[std::to_string(fps)] = v;
  json j{{"format_version", 1},
         {"baseline_fps", report.baseline_fps},
         {"rows", rows},
         {"median_temporal_error_s", med_err},
         {"median_improvement_ratio", med_ratio},
         {"degenerate_excluded", degen}};
  return j.dump(2) + "\n";
}

std::string scene_result_to_json(const SceneRunResult& result) {
  json collisions = json::array();
  for (const auto& c : result.collisions) {
    collisions.push_back(
        {{"collision_index", c.collision_index},
         {"status", c.status},
         {"pairing_score", c.pairing_score},
         {"pair",
          {{"audio_start_sample", c.audio_start_sample},
           {"audio_end_sample", c.audio_end_sample},
           {"frame_first", c.frame_first},
           {"frame_last", c.frame_last},
           {"mask_file", c.mask_file.empty() ? json(nullptr) : json(c.mask_file)}}},
         {"video_event",
          {{"split_e", c.split_e},
           {"split_s", c.split_s},
           {"t_video", c.t_video},
           {"inlier_count", c.inlier_count},
           {"l1_loss", c.l1_loss},
           {"intersection_histogram",
            {{"count", c.intersection_hist.count},
             {"min", c.intersection_hist.min},
             {"p25", c.intersection_hist.p25},
             {"median", c.intersection_hist.median},
             {"p75", c.intersection_hist.p75},
             {"max", c.intersection_hist.max}}}}},
         {"onset",
          {{"onset_sample", c.onset_sample},
           {"t_audio", c.t_audio},
           {"confidence", c.onset_confidence},
           {"window_clipped_start", c.clip_clipped_start},
           {"window_clipped_end", c.clip_clipped_end}}},
         {"T_s", c.T_s},
         {"depth_est", c.depth_est}});
  }
  json j{{"format_version", 1},
         {"scene_id", result.scene_id},
         {"fps", result.fps},
         {"status", result.status},
         {"overlapping_audio", result.overlapping_audio},
         {"unmatched_audio", result.unmatched_audio},
         {"unmatched_motion", result.unmatched_motion},
         {"collisions", collisions}};
  return j.dump(2) + "\n";
}

}  // namespace ftb
