// Batch CLI for the flash-to-bang depth toolkit: synthesize collision scene
// datasets, run the estimation pipeline, calibrate the recorder offset, and
// report accuracy metrics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftb/dataset.hpp"
#include "ftb/error.hpp"
#include "ftb/json_io.hpp"
#include "ftb/metrics.hpp"
#include "ftb/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw ftb::IoError("cannot open for writing: " + path.string());
  f << content;
}

std::vector<int> parse_fps_list(const std::string& csv) {
  std::vector<int> out;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

struct OffsetChoice {
  std::string calibration_path;
  bool known_offset = false;

  ftb::OffsetMode mode() const {
    if (!calibration_path.empty()) return ftb::OffsetMode::kCalibrated;
    if (known_offset) return ftb::OffsetMode::kKnownFromTruth;
    return ftb::OffsetMode::kZero;
  }
  ftb::CalibrationModel model() const {
    if (!calibration_path.empty()) return ftb::read_calibration(calibration_path);
    return {};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flash-to-bang audio-visual depth estimation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, out_path, fps_csv;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config file (per subcommand)");
  app.add_option("--out", out_path, "output file or directory");
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t s) { seed_override = s; seed_set = true; },
         "override the dataset RNG seed");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");

  auto* est = app.add_subcommand("estimate", "estimate depth for one scene");
  std::string scene_dir;
  int est_fps = 240;
  OffsetChoice est_offset;
  est->add_option("scene_dir", scene_dir, "scene directory")->required();
  est->add_option("--fps", est_fps, "frame-rate variant to use");
  est->add_option("--calibration", est_offset.calibration_path,
                  "calibration model JSON");
  est->add_flag("--known-offset", est_offset.known_offset,
                "read t_hw from the scene ground truth");

  auto* cal = app.add_subcommand("calibrate", "fit the recorder offset");
  std::string cal_dataset;
  int cal_fps = 240;
  bool fit_v = false;
  cal->add_option("dataset_dir", cal_dataset, "labeled dataset directory")->required();
  cal->add_option("--fps", cal_fps, "frame-rate variant to use");
  cal->add_flag("--fit-v", fit_v, "also fit the effective sound speed");

  auto* eval = app.add_subcommand("evaluate", "run the pipeline and report metrics");
  std::string eval_dataset;
  OffsetChoice eval_offset;
  eval->add_option("dataset_dir", eval_dataset, "dataset directory")->required();
  eval->add_option("--fps", fps_csv, "comma-separated fps filter (default: all)");
  eval->add_option("--calibration", eval_offset.calibration_path,
                   "calibration model JSON");
  eval->add_flag("--known-offset", eval_offset.known_offset,
                 "read t_hw from each scene's ground truth");

  auto* fpsr = app.add_subcommand("fps-report",
                                  "improvement-ratio table vs the 240 FPS baseline");
  std::string fpsr_dataset;
  fpsr->add_option("dataset_dir", fpsr_dataset, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // --help is a success
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  try {
    ftb::PipelineConfig pipeline_config;
    pipeline_config.threads = threads;

    if (sim->parsed()) {
      if (config_path.empty() || out_path.empty()) {
        std::cerr << "simulate requires --config and --out\n";
        return 1;
      }
      ftb::DatasetSpec spec = ftb::read_dataset_spec(config_path);
      if (seed_set) spec.seed = seed_override;
      ftb::generate_dataset(spec, out_path);
      std::cout << "dataset written to " << out_path << "\n";
    } else if (est->parsed()) {
      ftb::SceneRunResult result = ftb::run_scene(
          scene_dir, est_fps, est_offset.mode(), est_offset.model(), pipeline_config);
      if (!out_path.empty()) {
        // Write each pair's motion mask next to the report and reference it.
        fs::path out(out_path);
        for (auto& c : result.collisions) {
          if (c.motion_mask.empty()) continue;
          std::string name =
              out.stem().string() + "_mask" + std::to_string(c.collision_index) + ".pgm";
          ftb::ImageU8 img(c.motion_mask.width(), c.motion_mask.height());
          for (std::size_t i = 0; i < img.data().size(); ++i) {
            img.data()[i] = c.motion_mask.data()[i] ? 255 : 0;
          }
          ftb::write_pgm(img, out.parent_path().empty() ? fs::path(name)
                                                        : out.parent_path() / name);
          c.mask_file = name;
        }
        write_text(out, ftb::scene_result_to_json(result));
      }
      std::cout << ftb::scene_result_to_json(result);
      if (result.status != "ok") {
        std::cerr << "estimate failed for " << scene_dir << ": " << result.status
                  << "\n";
        return 2;
      }
    } else if (cal->parsed()) {
      if (out_path.empty()) {
        std::cerr << "calibrate requires --out\n";
        return 1;
      }
      ftb::CalibrationModel model =
          ftb::calibrate_from_dataset(cal_dataset, cal_fps, fit_v, pipeline_config);
      ftb::write_calibration(model, out_path);
      std::printf("t_hw = %.6f ms, residual = %.4f ms%s\n", model.t_hw_s * 1e3,
                  model.residual_ms,
                  model.v_eff ? (" , v_eff = " + std::to_string(*model.v_eff) + " m/s").c_str()
                              : "");
    } else if (eval->parsed()) {
      if (out_path.empty()) {
        std::cerr << "evaluate requires --out\n";
        return 1;
      }
      fs::create_directories(out_path);
      std::vector<int> fps_filter =
          fps_csv.empty() ? std::vector<int>{} : parse_fps_list(fps_csv);
      auto results = ftb::run_pipeline(eval_dataset, fps_filter, eval_offset.mode(),
                                       eval_offset.model(), pipeline_config);
      ftb::MetricsReport report = ftb::build_metrics(results, eval_dataset);
      write_text(fs::path(out_path) / "metrics.json", ftb::metrics_to_json(report));
      write_text(fs::path(out_path) / "metrics.csv", ftb::metrics_to_csv(report));
      for (const auto& [fps, agg] : report.abs_err_by_fps) {
        std::printf("fps %3d: median AbsErr %.3f m, median AbsRel %.2f%% (n=%d)\n",
                    fps, agg.median, report.abs_rel_by_fps.at(fps).median * 100.0,
                    agg.count);
      }
      std::cout << "report written to " << out_path << "\n";
    } else if (fpsr->parsed()) {
      if (out_path.empty()) {
        std::cerr << "fps-report requires --out\n";
        return 1;
      }
      fs::create_directories(out_path);
      auto results = ftb::run_pipeline(fpsr_dataset, {}, ftb::OffsetMode::kKnownFromTruth,
                                       {}, pipeline_config);
      ftb::FpsConsistencyReport report = ftb::fps_consistency_report(results);
      write_text(fs::path(out_path) / "improvement_ratio.json",
                 ftb::fps_report_to_json(report));
      write_text(fs::path(out_path) / "improvement_ratio.csv",
                 ftb::fps_report_to_csv(report));
      for (const auto& [fps, ratio] : report.median_ratio) {
        std::printf("fps %3d: median temporal error %.3f ms, improvement ratio %.1f\n",
                    fps, report.median_error_s.at(fps) * 1e3, ratio);
      }
      std::cout << "report written to " << out_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
