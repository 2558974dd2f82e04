#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rvc/eval.hpp"
#include "rvc/fdv.hpp"
#include "rvc/subhead.hpp"

namespace rvc {

// Everything a command needs, reproducible from the file alone.
//
// Flat `key = value` text grouped in sections:
//   [grid]        range_min, range_max (x,y,z), voxel (x,y,z)
//   [scene]       n_objects, points_per_object, ground_points, clutter_objects,
//                 points_per_clutter, noise_std
//   [detections]  fp_rate, jitter_std, fp_on_clutter, tp_score_mean, ...
//   [heatmap]     tp_sigma_scale, min_sigma, fp_sigma_min, fp_sigma_max, ...
//   [classifier]  kind, window, out_dim, kinds, windows
//   [train]       frames, per_class, epochs, batch_size, lr, beta1, beta2,
//                 eps, val_fraction
//   [eval]        frames, point_threshold, score_threshold
//   [seeds]       frames, eval_frames, dataset, train, backbone
//   [output]      dir
struct ExperimentConfig {
  CloudRange range{{-40.0, -40.0, -3.0}, {40.0, 40.0, 3.0}};
  std::array<double, 3> voxel{0.4, 0.4, 6.0};

  FrameConfig frame = default_frame_config();

  ClassifierSpec classifier;
  std::vector<ClassifierKind> ablation_kinds;  // empty: just `classifier`
  std::vector<std::size_t> ablation_windows;

  std::size_t train_frames = 320;
  std::size_t per_class = 2000;
  TrainConfig train;

  std::size_t eval_frames = 200;
  int point_threshold = kPointFilterThreshold;
  double score_threshold = kScoreFilterThreshold;

  std::uint64_t frame_seed = 1;
  std::uint64_t eval_seed = 2;
  std::uint64_t dataset_seed = 3;
  std::uint64_t backbone_seed = 4;

  std::string output_dir = "rvc_out";

  GridConfig grid() const { return compute_grid(range, voxel); }
};

ExperimentConfig parse_config(const std::string& text);
std::string format_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one `section.key=value` override. Throws ConfigError for unknown
// keys or unparsable values.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// ---------------------------------------------------------------------------
// Commands. Each writes its artifacts into `out_dir` and returns a summary.

struct SynthSummary {
  std::size_t scenes = 0;
  std::size_t points = 0;
  std::size_t gt_boxes = 0;
  std::size_t detections = 0;
  std::size_t false_positives = 0;
  std::vector<std::filesystem::path> files;
};

// scene_NNNN.rvc and dets_NNNN.rvc per frame. In a detection file the
// `seed` record is the heatmap simulation seed for that frame.
SynthSummary cmd_synth(const ExperimentConfig& cfg, std::size_t count,
                       const std::filesystem::path& out_dir);

// Rebuilds frames from a directory written by cmd_synth.
std::vector<Frame> load_frames(const std::filesystem::path& dir, const ExperimentConfig& cfg);

struct VoxelizeSummary {
  std::size_t points_in = 0;
  std::size_t points_skipped = 0;
  std::size_t pillars = 0;
  std::size_t max_occupancy = 0;
  double assign_ms = 0;
  double features_ms = 0;
  std::string to_json() const;
};

struct VoxelizeOutputs {
  std::filesystem::path pillars_csv;
  std::filesystem::path features_csv;  // empty: skip
  std::filesystem::path bev_bin;       // empty: skip backbone + BEV dump
};

// Reads .bin (KITTI), .csv, or .rvc (scene file) by extension.
PointCloud load_cloud_any(const std::filesystem::path& path);

VoxelizeSummary cmd_voxelize(const PointCloud& cloud, const GridConfig& grid,
                             const VoxelizeOutputs& outputs, std::uint64_t backbone_seed);

struct AblationRow {
  ClassifierKind kind;
  std::size_t window;
  double val_accuracy;
  std::vector<double> recall;
};

struct TrainSummary {
  std::vector<AblationRow> rows;
  std::size_t best = 0;  // index into rows
  std::vector<std::string> warnings;
};

// Trains every (kind, window) in the ablation grid (or the single spec).
// Writes ablation.csv, ablation_table.txt, curve_<kind>_k<k>.csv,
// subhead_<kind>_k<k>.ckpt and subhead.ckpt (best cell).
TrainSummary cmd_train_subhead(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct EvalSummary {
  std::vector<ReportRow> rows;
  std::size_t unclassified = 0;
};

// raw / point filter / score filter and, with a classifier, refined.
// Writes report.csv and report.txt.
EvalSummary cmd_eval(std::span<const Frame> frames, const ExperimentConfig& cfg,
                     const Classifier* classifier, const std::filesystem::path& out_dir);

struct BenchStage {
  std::string name;
  std::vector<double> median_seconds;  // per size
  double ratio = 0;                    // time(last) / time(first)
  double r_squared = 0;                // linear fit of time against N
};

struct BenchResult {
  std::vector<std::size_t> sizes;
  std::vector<BenchStage> stages;
  std::string to_text() const;
  std::string to_json() const;
};

// Uniform random points in the grid range. Median of `reps` (>= 5) timed
// runs after one discarded warm-up. Stages: voxelize (pillar assignment),
// features, voxelize+features, and optionally the backbone.
BenchResult run_bench(const std::vector<std::size_t>& sizes, std::size_t reps,
                      const GridConfig& grid, bool with_backbone, std::uint64_t seed);

// Least-squares fit y = a + b x; returns R^2.
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

// Pretty-prints a CSV written by cmd_eval or cmd_train_subhead.
std::string render_report(const std::string& csv_text);

}  // namespace rvc
