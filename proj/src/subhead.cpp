#include "rvc/subhead.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rvc/eval.hpp"

namespace rvc {

// ---------------------------------------------------------------------------
// Heatmaps

namespace {

std::int64_t floor_cell(double v, const GridConfig& grid, int axis) {
  return static_cast<std::int64_t>(std::floor((v - grid.range.min[axis]) / grid.voxel[axis]));
}

}  // namespace

FeatureMap render_peaks(std::span<const HeatPeak> peaks, const GridConfig& grid) {
  const std::int64_t rows = grid.size[1];
  const std::int64_t cols = grid.size[0];
  FeatureMap hm(kCropChannels, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (const HeatPeak& p : peaks) {
    if (p.channel < 0 || p.channel >= kCropChannels || !(p.sigma > 0)) {
      throw ConfigError("heat peak needs a valid channel and sigma > 0");
    }
    const std::int64_t pr = floor_cell(p.y, grid, 1);
    const std::int64_t pc = floor_cell(p.x, grid, 0);
    const auto radius = static_cast<std::int64_t>(std::ceil(4.0 * p.sigma));
    const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
    for (std::int64_t r = std::max<std::int64_t>(0, pr - radius);
         r <= std::min(rows - 1, pr + radius); ++r) {
      for (std::int64_t c = std::max<std::int64_t>(0, pc - radius);
           c <= std::min(cols - 1, pc + radius); ++c) {
        const double d2 = static_cast<double>((r - pr) * (r - pr) + (c - pc) * (c - pc));
        const double v = p.amplitude * std::exp(-d2 * inv);
        double& cell = hm.at(static_cast<std::size_t>(p.channel), static_cast<std::size_t>(r),
                             static_cast<std::size_t>(c));
        cell = std::max(cell, v);
      }
    }
  }
  return hm;
}

FeatureMap render_heatmap(std::span<const GtBox> boxes, const GridConfig& grid,
                          const GaussianHeatmapConfig& cfg) {
  if (!(cfg.sigma > 0)) throw ConfigError("heatmap sigma must be positive");
  std::vector<HeatPeak> peaks;
  peaks.reserve(boxes.size());
  for (const GtBox& b : boxes) {
    peaks.push_back({static_cast<int>(b.cls), b.cx, b.cy, cfg.peak, cfg.sigma});
  }
  return render_peaks(peaks, grid);
}

FeatureMap simulate_detector_heatmap(const SyntheticScene& scene,
                                     std::span<const Detection> dets,
                                     std::span<const std::uint8_t> is_tp,
                                     std::span<const int> gt_index, const GridConfig& grid,
                                     const DetectorHeatmapConfig& cfg) {
  if (is_tp.size() != dets.size() || gt_index.size() != dets.size()) {
    throw ShapeError("detection labels do not match the detection list");
  }
  Rng rng(cfg.seed);
  std::vector<HeatPeak> peaks;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Detection& d = dets[i];
    const int ch = static_cast<int>(d.box.cls);
    const int gi = gt_index[i];
    if (is_tp[i] && gi >= 0 && static_cast<std::size_t>(gi) < scene.gt.size()) {
      const GtBox& g = scene.gt[static_cast<std::size_t>(gi)];
      const double sigma =
          std::max(cfg.min_sigma, cfg.tp_sigma_scale * std::sqrt(g.l * g.w) / grid.voxel[0]);
      peaks.push_back({static_cast<int>(g.cls), g.cx, g.cy, d.score, sigma});
    } else {
      peaks.push_back({ch, d.box.cx, d.box.cy, d.score,
                       rng.uniform(cfg.fp_sigma_min, cfg.fp_sigma_max)});
      if (rng.uniform() < cfg.fp_cross_channel_prob) {
        const int other = (ch + 1 + static_cast<int>(rng.below(kNumClasses - 1))) % kNumClasses;
        peaks.push_back({other, d.box.cx, d.box.cy, d.score * rng.uniform(0.4, 0.9),
                         rng.uniform(cfg.fp_sigma_min, cfg.fp_sigma_max)});
      }
    }
  }
  FeatureMap hm = render_peaks(peaks, grid);
  for (double& v : hm.data) v = std::clamp(v + rng.uniform(0.0, cfg.noise), 0.0, 1.0);
  return hm;
}

// ---------------------------------------------------------------------------
// Crops

int crop_label(ObjectClass cls, bool true_positive) {
  return 2 * static_cast<int>(cls) + (true_positive ? 0 : 1);
}

const char* crop_label_name(int label) {
  static const char* names[] = {"True Vehicle",    "False Vehicle", "True Pedestrian",
                                "False Pedestrian", "True Cyclist", "False Cyclist"};
  return label >= 0 && label < kNumCropLabels ? names[label] : "?";
}

bool crop_window(const FeatureMap& hm, const Detection& det, const GridConfig& grid,
                 std::size_t k, HeatmapCrop& out) {
  if (k < 1) throw ConfigError("crop window must be at least 1");
  const auto& r = grid.range;
  if (!(det.box.cx >= r.min[0] && det.box.cx < r.max[0] && det.box.cy >= r.min[1] &&
        det.box.cy < r.max[1])) {
    return false;
  }
  const std::int64_t row = cell_of(det.box.cy, grid, 1);
  const std::int64_t col = cell_of(det.box.cx, grid, 0);
  const auto kk = static_cast<std::int64_t>(k);
  const std::int64_t offset = (kk + 1) / 2 - 1;
  const auto h = static_cast<std::int64_t>(hm.height);
  const auto w = static_cast<std::int64_t>(hm.width);
  out.k = k;
  out.window.assign(kCropChannels * k * k, 0.0);
  for (int c = 0; c < kCropChannels; ++c) {
    for (std::int64_t i = 0; i < kk; ++i) {
      const std::int64_t rr = row - offset + i;
      if (rr < 0 || rr >= h) continue;
      for (std::int64_t j = 0; j < kk; ++j) {
        const std::int64_t cc = col - offset + j;
        if (cc < 0 || cc >= w) continue;
        out.window[(static_cast<std::size_t>(c) * k + static_cast<std::size_t>(i)) * k +
                   static_cast<std::size_t>(j)] =
            hm.at(static_cast<std::size_t>(c), static_cast<std::size_t>(rr),
                  static_cast<std::size_t>(cc));
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Classifiers

const char* kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kMlp1:
      return "MLP-1";
    case ClassifierKind::kMlp2:
      return "MLP-2";
    case ClassifierKind::kMlp3:
      return "MLP-3";
    case ClassifierKind::kMlp4:
      return "MLP-4";
    case ClassifierKind::kConv1Mlp2:
      return "1Conv+MLP-2";
    case ClassifierKind::kConv2Mlp2:
      return "2Conv+MLP-2";
  }
  return "?";
}

ClassifierKind parse_kind(const std::string& name) {
  for (ClassifierKind k : kAllClassifierKinds) {
    if (name == kind_name(k)) return k;
  }
  throw ConfigError("unknown classifier kind '" + name + "'");
}

void ClassifierSpec::validate() const {
  if (window < 1 || window > kMaxWindow) {
    throw ConfigError("window must be in 1.." + std::to_string(kMaxWindow));
  }
  if (is_conv() && window < 3) {
    throw ConfigError(std::string(kind_name(kind)) + " needs a window of at least 3");
  }
  if (out_dim != 6 && out_dim != 2) {
    throw ConfigError("out_dim must be 6 (true/false per class) or 2 (true/false)");
  }
}

nn::Sequential build_classifier(const ClassifierSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<nn::Layer> layers;
  std::size_t in = spec.input_dim();
  if (spec.is_conv()) {
    layers.push_back(nn::make_conv2d(kCropChannels, 6, 2, 2, 1, rng));
    layers.push_back(nn::make_relu());
    std::size_t side = spec.window - 1;
    std::size_t ch = 6;
    if (spec.kind == ClassifierKind::kConv2Mlp2) {
      layers.push_back(nn::make_conv2d(6, 12, 2, 2, 1, rng));
      layers.push_back(nn::make_relu());
      side -= 1;
      ch = 12;
    }
    in = ch * side * side;
  }
  layers.push_back(nn::make_flatten());
  if (spec.kind == ClassifierKind::kMlp1) {
    layers.push_back(nn::make_linear(in, spec.out_dim, rng));
    return nn::Sequential(std::move(layers));
  }
  const std::size_t hidden = 2 * in;
  layers.push_back(nn::make_linear(in, hidden, rng));
  layers.push_back(nn::make_relu());
  std::size_t last = hidden;
  if (spec.kind == ClassifierKind::kMlp3 || spec.kind == ClassifierKind::kMlp4) {
    layers.push_back(nn::make_linear(last, 24, rng));
    layers.push_back(nn::make_relu());
    last = 24;
  }
  if (spec.kind == ClassifierKind::kMlp4) {
    layers.push_back(nn::make_linear(last, 6, rng));
    layers.push_back(nn::make_relu());
    last = 6;
  }
  layers.push_back(nn::make_linear(last, spec.out_dim, rng));
  return nn::Sequential(std::move(layers));
}

nn::Tensor crops_to_tensor(std::span<const HeatmapCrop> crops) {
  if (crops.empty()) throw ShapeError("no crops to stack");
  const std::size_t k = crops.front().k;
  const std::size_t per = kCropChannels * k * k;
  nn::Tensor t({crops.size(), static_cast<std::size_t>(kCropChannels), k, k});
  for (std::size_t i = 0; i < crops.size(); ++i) {
    if (crops[i].k != k || crops[i].window.size() != per) {
      throw ShapeError("crops have mixed window sizes");
    }
    std::copy(crops[i].window.begin(), crops[i].window.end(), t.data.begin() + i * per);
  }
  return t;
}

namespace {

std::vector<int> argmax_rows(const nn::Tensor& logits) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = logits.data.data() + i * k;
    out[i] = static_cast<int>(std::max_element(r, r + k) - r);
  }
  return out;
}

constexpr std::size_t kPredictChunk = 512;

}  // namespace

std::vector<int> predict(const Classifier& clf, std::span<const HeatmapCrop> crops) {
  std::vector<int> out;
  out.reserve(crops.size());
  for (std::size_t b = 0; b < crops.size(); b += kPredictChunk) {
    const auto chunk = crops.subspan(b, std::min(kPredictChunk, crops.size() - b));
    const auto labels = argmax_rows(clf.net.forward(crops_to_tensor(chunk)));
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

int training_target(int label, std::size_t out_dim) {
  return out_dim == 2 ? label % 2 : label;
}

Checkpoint classifier_to_checkpoint(const Classifier& clf) {
  Checkpoint ckpt;
  ckpt.metadata = std::string("kind=") + kind_name(clf.spec.kind) +
                  ";window=" + std::to_string(clf.spec.window) +
                  ";out_dim=" + std::to_string(clf.spec.out_dim);
  for (const nn::Tensor* t : clf.net.parameters()) {
    CheckpointTensor ct;
    for (std::size_t d : t->shape) ct.shape.push_back(static_cast<std::uint32_t>(d));
    ct.data = t->data;
    ckpt.tensors.push_back(std::move(ct));
  }
  return ckpt;
}

Classifier classifier_from_checkpoint(const Checkpoint& ckpt) {
  std::map<std::string, std::string> meta;
  std::stringstream ss(ckpt.metadata);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) meta[item.substr(0, eq)] = item.substr(eq + 1);
  }
  if (!meta.count("kind") || !meta.count("window") || !meta.count("out_dim")) {
    throw FormatError("checkpoint does not describe a classifier");
  }
  Classifier clf;
  try {
    clf.spec.kind = parse_kind(meta["kind"]);
    clf.spec.window = std::stoul(meta["window"]);
    clf.spec.out_dim = std::stoul(meta["out_dim"]);
  } catch (const std::logic_error&) {
    throw FormatError("malformed classifier metadata '" + ckpt.metadata + "'");
  }
  clf.net = build_classifier(clf.spec, 0);
  auto params = clf.net.parameters();
  if (params.size() != ckpt.tensors.size()) {
    throw FormatError("checkpoint tensor count does not match the classifier");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& ct = ckpt.tensors[i];
    std::vector<std::size_t> shape(ct.shape.begin(), ct.shape.end());
    if (shape != params[i]->shape) {
      throw FormatError("checkpoint tensor " + std::to_string(i) + " has shape " +
                        nn::shape_string(shape) + ", expected " +
                        nn::shape_string(params[i]->shape));
    }
    params[i]->data = ct.data;
  }
  return clf;
}

// ---------------------------------------------------------------------------
// Training

AccuracyReport evaluate_classifier(const Classifier& clf, std::span<const HeatmapCrop> crops) {
  AccuracyReport rep;
  rep.n = crops.size();
  const std::size_t k = clf.spec.out_dim;
  rep.recall.assign(k, std::numeric_limits<double>::quiet_NaN());
  if (crops.empty()) return rep;
  const auto pred = predict(clf, crops);
  std::vector<std::size_t> hit(k, 0), total(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const int t = training_target(crops[i].label, k);
    ++total[static_cast<std::size_t>(t)];
    if (pred[i] == t) {
      ++correct;
      ++hit[static_cast<std::size_t>(t)];
    }
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(crops.size());
  for (std::size_t c = 0; c < k; ++c) {
    if (total[c] > 0) rep.recall[c] = static_cast<double>(hit[c]) / static_cast<double>(total[c]);
  }
  return rep;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

}  // namespace

TrainResult train_subhead(std::span<const HeatmapCrop> dataset, const ClassifierSpec& spec,
                          const TrainConfig& cfg) {
  spec.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  if (cfg.epochs == 0 || cfg.batch_size == 0) {
    throw ConfigError("epochs and batch_size must be positive");
  }
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> per_target(spec.out_dim, 0);
  for (const auto& c : dataset) {
    if (c.k != spec.window || c.window.size() != spec.input_dim()) {
      throw ShapeError("crop window " + std::to_string(c.k) + " does not match spec window " +
                       std::to_string(spec.window));
    }
    if (c.label < 0 || c.label >= kNumCropLabels) {
      throw BoundsError("crop label " + std::to_string(c.label) + " outside [0, 6)");
    }
    ++per_target[static_cast<std::size_t>(training_target(c.label, spec.out_dim))];
  }

  TrainResult result;
  if (*std::min_element(per_target.begin(), per_target.end()) !=
      *std::max_element(per_target.begin(), per_target.end())) {
    result.warnings.push_back("training classes are not balanced");
  }

  Rng rng(cfg.seed);
  std::vector<HeatmapCrop> data(dataset.begin(), dataset.end());
  if (cfg.shuffle_labels) {
    std::vector<int> labels;
    for (const auto& c : data) labels.push_back(c.label);
    shuffle(labels, rng);
    for (std::size_t i = 0; i < data.size(); ++i) data[i].label = labels[i];
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(data.size()));
  if (n_val == 0 && cfg.val_fraction > 0 && data.size() >= 2) n_val = 1;
  const std::size_t n_train = data.size() - n_val;
  std::vector<HeatmapCrop> train, val;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (i < n_train ? train : val).push_back(data[order[i]]);
  }
  if (val.empty()) val = train;

  result.classifier.spec = spec;
  result.classifier.net = build_classifier(spec, rng.next_u64());
  nn::AdamState adam;
  adam.config = cfg.adam;
  auto params = result.classifier.net.parameters();

  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<HeatmapCrop> batch;
  std::vector<int> targets;
  nn::Sequential::Trace trace;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(idx, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
      batch.clear();
      targets.clear();
      for (std::size_t j = b; j < std::min(idx.size(), b + cfg.batch_size); ++j) {
        batch.push_back(train[idx[j]]);
        targets.push_back(training_target(train[idx[j]].label, spec.out_dim));
      }
      const nn::Tensor logits = result.classifier.net.forward(crops_to_tensor(batch), trace);
      const nn::LossResult loss = nn::cross_entropy(logits, targets);
      const auto grads = result.classifier.net.backward(trace, loss.grad);
      nn::adam_step(params, grads, adam);
      loss_sum += loss.loss;
      ++batches;
    }
    const AccuracyReport rep = evaluate_classifier(result.classifier, val);
    result.curve.push_back({epoch, loss_sum / static_cast<double>(batches), rep.accuracy,
                            rep.recall});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Refinement

RefineResult refine(std::span<const Detection> dets, const FeatureMap& hm,
                    const Classifier& clf, const GridConfig& grid) {
  clf.spec.validate();
  RefineResult out;
  std::vector<HeatmapCrop> crops;
  std::vector<std::size_t> crop_det;
  std::vector<std::uint8_t> keep(dets.size(), 1);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    HeatmapCrop c;
    if (crop_window(hm, dets[i], grid, clf.spec.window, c)) {
      crops.push_back(std::move(c));
      crop_det.push_back(i);
    } else {
      ++out.unclassified;
    }
  }
  if (!crops.empty()) {
    const auto pred = predict(clf, crops);
    for (std::size_t j = 0; j < crops.size(); ++j) {
      const Detection& d = dets[crop_det[j]];
      const int want = training_target(crop_label(d.box.cls, true), clf.spec.out_dim);
      keep[crop_det[j]] = pred[j] == want ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep[i]) {
      out.kept.push_back(dets[i]);
      out.kept_index.push_back(i);
    } else {
      out.dropped.push_back(dets[i]);
      out.dropped_index.push_back(i);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frames and datasets

GridConfig default_heatmap_grid() {
  return compute_pillar_grid(CloudRange{{-40.0, -40.0, -3.0}, {40.0, 40.0, 3.0}}, 0.4, 0.4);
}

FrameConfig default_frame_config() {
  FrameConfig cfg;
  cfg.scene.n_objects = 20;
  cfg.scene.points_per_object = 60;
  cfg.scene.ground_points = 3000;
  cfg.scene.clutter_objects = 10;
  cfg.scene.points_per_clutter = 40;
  cfg.scene.range = CloudRange{{-40.0, -40.0, -3.0}, {40.0, 40.0, 3.0}};
  cfg.detections.fp_rate = 0.5;
  return cfg;
}

Frame make_frame(const FrameConfig& cfg, const GridConfig& grid, std::uint64_t base_seed,
                 std::size_t index) {
  Rng seeds = Rng(base_seed).fork(index);
  Frame f;
  SceneConfig sc = cfg.scene;
  sc.seed = seeds.next_u64();
  f.scene = synth_scene(sc);
  DetectionConfig dc = cfg.detections;
  dc.seed = seeds.next_u64();
  f.dets = synth_detections(f.scene, dc);
  DetectorHeatmapConfig hc = cfg.heatmap;
  hc.seed = seeds.next_u64();
  f.heatmap = simulate_detector_heatmap(f.scene, f.dets.dets, f.dets.is_tp, f.dets.gt_index,
                                        grid, hc);
  return f;
}

std::vector<Frame> make_frames(const FrameConfig& cfg, const GridConfig& grid,
                               std::uint64_t base_seed, std::size_t count) {
  std::vector<Frame> frames(count);
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) frames[i] = make_frame(cfg, grid, base_seed, i);
  });
  return frames;
}

CropDataset build_crop_dataset(std::span<const Frame> frames, const GridConfig& grid,
                               const CropDatasetConfig& cfg) {
  if (cfg.window < 1 || cfg.window > kMaxWindow) {
    throw ConfigError("window must be in 1.." + std::to_string(kMaxWindow));
  }
  std::array<std::vector<HeatmapCrop>, kNumCropLabels> pools;
  for (const Frame& f : frames) {
    const MatchResult m = match(f.dets.dets, f.scene.gt, kMatchIouThreshold);
    for (std::size_t i = 0; i < f.dets.size(); ++i) {
      HeatmapCrop c;
      if (!crop_window(f.heatmap, f.dets.dets[i], grid, cfg.window, c)) continue;
      c.label = crop_label(f.dets.dets[i].box.cls, m.det_tp[i] != 0);
      c.source = i;
      pools[static_cast<std::size_t>(c.label)].push_back(std::move(c));
    }
  }
  CropDataset ds;
  Rng rng(cfg.seed);
  for (int label = 0; label < kNumCropLabels; ++label) {
    auto& pool = pools[static_cast<std::size_t>(label)];
    ds.available[static_cast<std::size_t>(label)] = pool.size();
    Rng pick = rng.fork(static_cast<std::uint64_t>(label));
    shuffle(pool, pick);
    const std::size_t take = std::min(pool.size(), cfg.per_class);
    ds.selected[static_cast<std::size_t>(label)] = take;
    if (take < cfg.per_class) {
      ds.warnings.push_back(std::string("only ") + std::to_string(pool.size()) + " crops of " +
                            crop_label_name(label) + " available, wanted " +
                            std::to_string(cfg.per_class));
    }
    for (std::size_t i = 0; i < take; ++i) ds.crops.push_back(std::move(pool[i]));
  }
  shuffle(ds.crops, rng);
  return ds;
}

// ---------------------------------------------------------------------------
// rvc-crops v1

namespace {

constexpr char kCropsMagic[] = "rvc-crops v1\n";
constexpr std::size_t kCropsMagicLen = sizeof(kCropsMagic) - 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& pos) {
  if (b.size() - pos < 4) throw FormatError("crop file is truncated");
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[pos + k]) << (8 * k);
  pos += 4;
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_crops(std::span<const HeatmapCrop> crops) {
  std::vector<std::uint8_t> out(kCropsMagic, kCropsMagic + kCropsMagicLen);
  put_u32(out, static_cast<std::uint32_t>(crops.size()));
  for (const auto& c : crops) {
    if (c.window.size() != kCropChannels * c.k * c.k) {
      throw ShapeError("crop window does not match k");
    }
    put_u32(out, static_cast<std::uint32_t>(c.k));
    put_u32(out, static_cast<std::uint32_t>(c.label));
    for (double v : c.window) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

std::vector<HeatmapCrop> decode_crops(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCropsMagicLen ||
      std::memcmp(bytes.data(), kCropsMagic, kCropsMagicLen) != 0) {
    throw FormatError("not an rvc-crops v1 file");
  }
  std::size_t pos = kCropsMagicLen;
  const std::uint32_t n = get_u32(bytes, pos);
  std::vector<HeatmapCrop> crops;
  for (std::uint32_t i = 0; i < n; ++i) {
    HeatmapCrop c;
    c.k = get_u32(bytes, pos);
    c.label = static_cast<std::int32_t>(get_u32(bytes, pos));
    if (c.k < 1 || c.k > kMaxWindow) throw FormatError("crop record has invalid k");
    if (c.label < 0 || c.label >= kNumCropLabels) throw DataError("crop record has invalid label");
    c.window.resize(kCropChannels * c.k * c.k);
    for (double& v : c.window) {
      const float f = std::bit_cast<float>(get_u32(bytes, pos));
      if (!std::isfinite(f)) throw DataError("non-finite crop value");
      v = f;
    }
    c.source = i;
    crops.push_back(std::move(c));
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after crop records");
  return crops;
}

void save_crops(const std::filesystem::path& path, std::span<const HeatmapCrop> crops) {
  const auto bytes = encode_crops(crops);
  write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

std::vector<HeatmapCrop> load_crops(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return decode_crops(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

}  // namespace rvc
