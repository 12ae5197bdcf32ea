#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ftb/pipeline.hpp"

namespace ftb {

struct MetricsRow {
  std::string scene_id;
  int collision_index = 0;
  int fps = 0;
  std::string bucket;  // "<10", "10-30", ">30"
  double depth_gt = 0.0;
  double depth_est = 0.0;
  double abs_err = 0.0;
  double abs_rel = 0.0;
  std::string status;  // "ok" or the failure reason
};

struct Aggregate {
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  int count = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::map<int, Aggregate> abs_err_by_fps;
  std::map<int, Aggregate> abs_rel_by_fps;
  // Buckets aggregated at the highest available frame rate.
  std::map<std::string, Aggregate> abs_err_by_bucket;
  std::map<std::string, Aggregate> abs_rel_by_bucket;
  std::map<std::string, int> failure_counts;  // per status
  int ok_count = 0;
};

std::string depth_bucket(double depth_m);

MetricsReport build_metrics(const std::vector<SceneRunResult>& results,
                            const std::filesystem::path& dataset_dir);

std::string metrics_to_csv(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report);

struct FpsConsistencyReport {
  struct Row {
    std::string scene_id;
    int fps = 0;
    double temporal_error_s = 0.0;   // |t_video(fps) - t_video(baseline)|
    double improvement_ratio = 0.0;  // frame duration / temporal error
  };
  int baseline_fps = 240;
  std::vector<Row> rows;
  std::map<int, double> median_error_s;
  std::map<int, double> median_ratio;
  std::map<int, int> degenerate_count;  // zero-error comparisons, excluded
};

FpsConsistencyReport fps_consistency_report(
    const std::vector<SceneRunResult>& results, int baseline_fps = 240);

std::string fps_report_to_csv(const FpsConsistencyReport& report);
std::string fps_report_to_json(const FpsConsistencyReport& report);

// Per-scene estimate report covering the external event interfaces: the
// pairs manifest, the onset report and the video event summary.
std::string scene_result_to_json(const SceneRunResult& result);

}  // namespace ftb
