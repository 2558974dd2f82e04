#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rvc/common.hpp"

namespace rvc {

// KITTI-compatible point record. Coordinates in meters, intensity unitless.
struct Point {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;
};

// Points plus one batch id per point. Batch ids must form 0..B-1.
struct PointCloud {
  std::vector<Point> points;
  std::vector<std::uint32_t> batch_ids;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  // Number of distinct batches (max id + 1, 0 when empty).
  std::uint32_t batch_count() const;
  void push_back(const Point& p, std::uint32_t batch = 0) {
    points.push_back(p);
    batch_ids.push_back(batch);
  }
};

// Throws DataError on non-finite coordinates, size mismatch, or a batch id
// set that is not contiguous from 0.
void validate(const PointCloud& cloud);

enum class ObjectClass : int { kVehicle = 0, kPedestrian = 1, kCyclist = 2 };
inline constexpr int kNumClasses = 3;
const char* class_name(ObjectClass c);
ObjectClass class_from_index(int idx);

struct GtBox {
  double cx = 0, cy = 0, cz = 0;
  double l = 1, w = 1, h = 1;
  double yaw = 0;  // radians, [-pi, pi)
  ObjectClass cls = ObjectClass::kVehicle;
};

void validate(const GtBox& box);

struct Detection {
  GtBox box;
  double score = 0;  // [0, 1]
};

// Per-axis half-open extent [min, max).
struct CloudRange {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> max{1, 1, 1};

  bool contains(double x, double y, double z) const {
    return x >= min[0] && x < max[0] && y >= min[1] && y < max[1] &&
           z >= min[2] && z < max[2];
  }
};

// Throws ConfigError naming the first axis with min >= max.
void validate(const CloudRange& range);

// ---------------------------------------------------------------------------
// File ingestion.

// Little-endian float32 x, y, z, intensity per 16-byte record, no header.
PointCloud load_kitti_bin(const std::filesystem::path& path);
PointCloud decode_kitti_bin(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_kitti_bin(const PointCloud& cloud);
void save_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud);

// Rows `batch_id,x,y,z[,intensity]`; an optional header line is skipped when
// its first field is not numeric.
PointCloud load_csv(const std::filesystem::path& path);
PointCloud parse_csv(const std::string& text);

PointCloud filter_range(const PointCloud& cloud, const CloudRange& range);

// ---------------------------------------------------------------------------
// Synthetic scenes.

struct SceneConfig {
  int n_objects = 10;
  int points_per_object = 60;
  int ground_points = 2000;
  // Unlabeled point blobs (walls, vegetation); detectors fire on these.
  int clutter_objects = 0;
  int points_per_clutter = 40;
  CloudRange range{{-40.0, -40.0, -3.0}, {40.0, 40.0, 3.0}};
  double noise_std = 0.02;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  PointCloud cloud;
  std::vector<GtBox> gt;
  std::vector<GtBox> clutter;
  std::uint64_t seed = 0;
};

SyntheticScene synth_scene(const SceneConfig& config);

// Clamped normal score distributions for simulated detector output.
struct ScoreModel {
  double tp_mean = 0.65;
  double tp_std = 0.15;
  double fp_mean = 0.40;
  double fp_std = 0.15;
};

struct DetectionConfig {
  double fp_rate = 0.5;  // target FP fraction, [0, 1)
  double jitter_std = 0.10;
  ScoreModel score_model;
  // Probability that an FP is placed on a clutter blob (when any exist).
  double fp_on_clutter = 0.5;
  std::uint64_t seed = 0;
};

// Detections with the generator's supervision retained.
struct LabeledDetections {
  std::vector<Detection> dets;
  std::vector<std::uint8_t> is_tp;
  std::vector<int> gt_index;  // matching GT for TPs, -1 for FPs

  std::size_t size() const { return dets.size(); }
};

// One jittered TP per GT box plus round(n_gt * r / (1 - r)) FP boxes whose
// BEV IoU with every GT box is below 0.4.
LabeledDetections synth_detections(const SyntheticScene& scene,
                                   const DetectionConfig& config);

// Class-typical box dimensions (l, w, h) sampled around fixed priors.
std::array<double, 3> sample_class_dims(ObjectClass cls, Rng& rng);

// ---------------------------------------------------------------------------
// `rvc-scene v1` text format. One record per line:
//   seed <u64>
//   point <batch> <x> <y> <z> <intensity>
//   gt <class> <cx> <cy> <cz> <l> <w> <h> <yaw>
//   clutter <class> <cx> <cy> <cz> <l> <w> <h> <yaw>
//   det <class> <cx> <cy> <cz> <l> <w> <h> <yaw> <score> <is_tp> <gt_index>
// Numbers use the shortest round-trip decimal form.

struct SceneFile {
  SyntheticScene scene;
  LabeledDetections detections;
};

inline constexpr const char* kSceneHeader = "rvc-scene v1";

std::string format_scene_file(const SyntheticScene* scene,
                              const LabeledDetections* dets);
SceneFile parse_scene_file(const std::string& text);
void save_scene_file(const std::filesystem::path& path,
                     const SyntheticScene* scene,
                     const LabeledDetections* dets);
SceneFile load_scene_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace rvc
