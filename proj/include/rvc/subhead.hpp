#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rvc/cloudio.hpp"
#include "rvc/fdv.hpp"
#include "rvc/rvbackbone.hpp"
#include "rvc/tinynn.hpp"

namespace rvc {

// ---------------------------------------------------------------------------
// Heatmaps.

struct GaussianHeatmapConfig {
  double sigma = 1.5;  // cells
  double peak = 1.0;
};

// One Gaussian bump on a class channel, centered on the cell containing
// (x, y). Cells farther than 4 sigma stay untouched.
struct HeatPeak {
  int channel = 0;
  double x = 0;
  double y = 0;
  double amplitude = 1.0;
  double sigma = 1.0;  // cells
};

// 3 x rows x cols map; peaks are max-composited.
FeatureMap render_peaks(std::span<const HeatPeak> peaks, const GridConfig& grid);
FeatureMap render_heatmap(std::span<const GtBox> boxes, const GridConfig& grid,
                          const GaussianHeatmapConfig& cfg);

// Stand-in for a trained center head's heatmap. True detections light the
// object's class channel with a footprint-sized peak at the object center,
// amplitude equal to the detection score. False detections light a
// randomly-sized peak at the detection center, sometimes with a second
// response on another class channel. Uniform background noise is added and
// the result clamped to [0, 1].
struct DetectorHeatmapConfig {
  double tp_sigma_scale = 0.35;  // sigma = scale * sqrt(l * w) / voxel, in cells
  double min_sigma = 0.7;
  double fp_sigma_min = 1.0;
  double fp_sigma_max = 2.2;
  double fp_cross_channel_prob = 0.7;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

FeatureMap simulate_detector_heatmap(const SyntheticScene& scene,
                                     std::span<const Detection> dets,
                                     std::span<const std::uint8_t> is_tp,
                                     std::span<const int> gt_index,
                                     const GridConfig& grid,
                                     const DetectorHeatmapConfig& cfg);

// ---------------------------------------------------------------------------
// Crops.

inline constexpr int kCropChannels = 3;
inline constexpr std::size_t kMaxWindow = 10;
inline constexpr int kNumCropLabels = 6;

// True Vehicle, False Vehicle, True Pedestrian, False Pedestrian, True
// Cyclist, False Cyclist.
int crop_label(ObjectClass cls, bool true_positive);
const char* crop_label_name(int label);

struct HeatmapCrop {
  std::size_t k = 0;
  std::vector<double> window;  // 3 x k x k, channel-major
  int label = -1;
  std::size_t source = 0;  // detection index in its scene
};

// Window of k cells centered on the detection's cell; for even k the center
// sits at index ceil(k/2) - 1. Off-map cells are zero. Returns false (and
// leaves `out` untouched) when the detection center is outside the grid range.
bool crop_window(const FeatureMap& hm, const Detection& det, const GridConfig& grid,
                 std::size_t k, HeatmapCrop& out);

// ---------------------------------------------------------------------------
// Classifiers.

enum class ClassifierKind { kMlp1, kMlp2, kMlp3, kMlp4, kConv1Mlp2, kConv2Mlp2 };

inline constexpr std::array<ClassifierKind, 6> kAllClassifierKinds = {
    ClassifierKind::kMlp1,      ClassifierKind::kMlp2,     ClassifierKind::kMlp3,
    ClassifierKind::kMlp4,      ClassifierKind::kConv1Mlp2, ClassifierKind::kConv2Mlp2};

const char* kind_name(ClassifierKind kind);
ClassifierKind parse_kind(const std::string& name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kMlp2;
  std::size_t window = 9;
  std::size_t out_dim = kNumCropLabels;  // 6, or 2 for class-agnostic true/false

  // Throws ConfigError for k outside 1..10, conv kinds with k < 3, or an
  // unsupported output width.
  void validate() const;
  std::size_t input_dim() const { return kCropChannels * window * window; }
  bool is_conv() const {
    return kind == ClassifierKind::kConv1Mlp2 || kind == ClassifierKind::kConv2Mlp2;
  }
};

// Layer plan:
//   MLP-1        linear(in, out)
//   MLP-2        linear(in, 2 in), ReLU, linear(2 in, out)
//   MLP-3        MLP-2 with linear(2 in, 24) + ReLU before the output layer
//   MLP-4        MLP-3 with linear(24, 6) + ReLU before the output layer
//   1Conv+MLP-2  conv(3->6, 2x2, s1), ReLU, MLP-2 on the flattened map
//   2Conv+MLP-2  conv(3->6), ReLU, conv(6->12), ReLU, MLP-2
nn::Sequential build_classifier(const ClassifierSpec& spec, std::uint64_t seed);

struct Classifier {
  ClassifierSpec spec;
  nn::Sequential net;
};

// Crops -> batch x 3 x k x k tensor.
nn::Tensor crops_to_tensor(std::span<const HeatmapCrop> crops);
std::vector<int> predict(const Classifier& clf, std::span<const HeatmapCrop> crops);
// Label a crop must take for the target (2 or 6 outputs).
int training_target(int crop_label, std::size_t out_dim);

Checkpoint classifier_to_checkpoint(const Classifier& clf);
Classifier classifier_from_checkpoint(const Checkpoint& ckpt);

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double val_fraction = 0.2;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle_labels = false;  // control experiment: permute labels first
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_accuracy = 0;
  std::vector<double> val_recall;  // per output label; NaN when absent
};

struct TrainResult {
  Classifier classifier;
  std::vector<EpochMetrics> curve;
  std::vector<std::string> warnings;
  double final_val_accuracy() const { return curve.empty() ? 0.0 : curve.back().val_accuracy; }
};

TrainResult train_subhead(std::span<const HeatmapCrop> dataset, const ClassifierSpec& spec,
                          const TrainConfig& cfg);

struct AccuracyReport {
  double accuracy = 0;
  std::vector<double> recall;
  std::size_t n = 0;
};
AccuracyReport evaluate_classifier(const Classifier& clf, std::span<const HeatmapCrop> crops);

// ---------------------------------------------------------------------------
// Refinement.

struct RefineResult {
  std::vector<Detection> kept;
  std::vector<Detection> dropped;
  std::vector<std::size_t> kept_index;
  std::vector<std::size_t> dropped_index;
  std::size_t unclassified = 0;  // outside the grid, passed through in `kept`
};

// A detection is kept when the classifier predicts "True <its class>".
RefineResult refine(std::span<const Detection> dets, const FeatureMap& hm,
                    const Classifier& clf, const GridConfig& grid);

// ---------------------------------------------------------------------------
// Dataset construction.

// One simulated frame: scene, detector output, and the detector heatmap.
struct Frame {
  SyntheticScene scene;
  LabeledDetections dets;
  FeatureMap heatmap;
};

struct FrameConfig {
  SceneConfig scene;
  DetectionConfig detections;
  DetectorHeatmapConfig heatmap;
};

// Frame i uses seeds derived from (base seed, i); frames are independent.
Frame make_frame(const FrameConfig& cfg, const GridConfig& grid, std::uint64_t base_seed,
                 std::size_t index);
std::vector<Frame> make_frames(const FrameConfig& cfg, const GridConfig& grid,
                               std::uint64_t base_seed, std::size_t count);

// Default BEV grid for heatmaps: [-40, 40)^2 at 0.4 m.
GridConfig default_heatmap_grid();
FrameConfig default_frame_config();

struct CropDatasetConfig {
  std::size_t window = 9;
  std::size_t per_class = 1000;
  std::uint64_t seed = 0;
};

struct CropDataset {
  std::vector<HeatmapCrop> crops;
  std::array<std::size_t, kNumCropLabels> available{};
  std::array<std::size_t, kNumCropLabels> selected{};
  std::vector<std::string> warnings;
};

// Labels come from IoU-0.4 matching of each frame's detections against its
// GT. Classes are balanced to per_class by seeded subsampling.
CropDataset build_crop_dataset(std::span<const Frame> frames, const GridConfig& grid,
                               const CropDatasetConfig& cfg);

// `rvc-crops v1` binary: magic "rvc-crops v1\n", u32 record count, then per
// record u32 k, i32 label, 3*k*k float32 (channel-major). Little-endian.
std::vector<std::uint8_t> encode_crops(std::span<const HeatmapCrop> crops);
std::vector<HeatmapCrop> decode_crops(std::span<const std::uint8_t> bytes);
void save_crops(const std::filesystem::path& path, std::span<const HeatmapCrop> crops);
std::vector<HeatmapCrop> load_crops(const std::filesystem::path& path);

}  // namespace rvc
