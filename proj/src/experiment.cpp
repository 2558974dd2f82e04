#include "rvc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace rvc {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  double v = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw ConfigError(key + ": cannot parse '" + s + "' as a non-negative integer");
  }
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  int v = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw ConfigError(key + ": cannot parse '" + s + "' as an integer");
  }
  return v;
}

std::array<double, 3> to_triple(const std::string& key, const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

std::string fmt_triple(const std::array<double, 3>& v) {
  return fmt_double(v[0]) + "," + fmt_double(v[1]) + "," + fmt_double(v[2]);
}

struct Entry {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define RVC_DOUBLE(sec, name, field)                                              \
  Entry{sec, name, [](const ExperimentConfig& c) { return fmt_double(c.field); }, \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {     \
          c.field = to_double(k, v);                                              \
        }}
#define RVC_SIZE(sec, name, field)                                                    \
  Entry{sec, name, [](const ExperimentConfig& c) { return std::to_string(c.field); }, \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {         \
          c.field = static_cast<decltype(c.field)>(to_u64(k, v));                     \
        }}
#define RVC_INT(sec, name, field)                                                     \
  Entry{sec, name, [](const ExperimentConfig& c) { return std::to_string(c.field); }, \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {         \
          c.field = to_int(k, v);                                                     \
        }}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      Entry{"grid", "range_min", [](const ExperimentConfig& c) { return fmt_triple(c.range.min); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.range.min = to_triple(k, v);
            }},
      Entry{"grid", "range_max", [](const ExperimentConfig& c) { return fmt_triple(c.range.max); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.range.max = to_triple(k, v);
            }},
      Entry{"grid", "voxel", [](const ExperimentConfig& c) { return fmt_triple(c.voxel); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.voxel = to_triple(k, v);
            }},
      RVC_INT("scene", "n_objects", frame.scene.n_objects),
      RVC_INT("scene", "points_per_object", frame.scene.points_per_object),
      RVC_INT("scene", "ground_points", frame.scene.ground_points),
      RVC_INT("scene", "clutter_objects", frame.scene.clutter_objects),
      RVC_INT("scene", "points_per_clutter", frame.scene.points_per_clutter),
      RVC_DOUBLE("scene", "noise_std", frame.scene.noise_std),
      RVC_DOUBLE("detections", "fp_rate", frame.detections.fp_rate),
      RVC_DOUBLE("detections", "jitter_std", frame.detections.jitter_std),
      RVC_DOUBLE("detections", "fp_on_clutter", frame.detections.fp_on_clutter),
      RVC_DOUBLE("detections", "tp_score_mean", frame.detections.score_model.tp_mean),
      RVC_DOUBLE("detections", "tp_score_std", frame.detections.score_model.tp_std),
      RVC_DOUBLE("detections", "fp_score_mean", frame.detections.score_model.fp_mean),
      RVC_DOUBLE("detections", "fp_score_std", frame.detections.score_model.fp_std),
      RVC_DOUBLE("heatmap", "tp_sigma_scale", frame.heatmap.tp_sigma_scale),
      RVC_DOUBLE("heatmap", "min_sigma", frame.heatmap.min_sigma),
      RVC_DOUBLE("heatmap", "fp_sigma_min", frame.heatmap.fp_sigma_min),
      RVC_DOUBLE("heatmap", "fp_sigma_max", frame.heatmap.fp_sigma_max),
      RVC_DOUBLE("heatmap", "fp_cross_channel_prob", frame.heatmap.fp_cross_channel_prob),
      RVC_DOUBLE("heatmap", "noise", frame.heatmap.noise),
      Entry{"classifier", "kind",
            [](const ExperimentConfig& c) { return std::string(kind_name(c.classifier.kind)); },
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
              c.classifier.kind = parse_kind(trim(v));
            }},
      RVC_SIZE("classifier", "window", classifier.window),
      RVC_SIZE("classifier", "out_dim", classifier.out_dim),
      Entry{"classifier", "kinds",
            [](const ExperimentConfig& c) {
              std::string s;
              for (auto k : c.ablation_kinds) s += (s.empty() ? "" : ",") + std::string(kind_name(k));
              return s;
            },
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
              c.ablation_kinds.clear();
              for (const auto& p : split_list(v)) c.ablation_kinds.push_back(parse_kind(p));
            }},
      Entry{"classifier", "windows",
            [](const ExperimentConfig& c) {
              std::string s;
              for (auto k : c.ablation_windows) s += (s.empty() ? "" : ",") + std::to_string(k);
              return s;
            },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.ablation_windows.clear();
              for (const auto& p : split_list(v)) c.ablation_windows.push_back(to_u64(k, p));
            }},
      RVC_SIZE("train", "frames", train_frames),
      RVC_SIZE("train", "per_class", per_class),
      RVC_SIZE("train", "epochs", train.epochs),
      RVC_SIZE("train", "batch_size", train.batch_size),
      RVC_DOUBLE("train", "lr", train.adam.lr),
      RVC_DOUBLE("train", "beta1", train.adam.beta1),
      RVC_DOUBLE("train", "beta2", train.adam.beta2),
      RVC_DOUBLE("train", "eps", train.adam.eps),
      RVC_DOUBLE("train", "val_fraction", train.val_fraction),
      RVC_SIZE("eval", "frames", eval_frames),
      RVC_INT("eval", "point_threshold", point_threshold),
      RVC_DOUBLE("eval", "score_threshold", score_threshold),
      RVC_SIZE("seeds", "frames", frame_seed),
      RVC_SIZE("seeds", "eval_frames", eval_seed),
      RVC_SIZE("seeds", "dataset", dataset_seed),
      RVC_SIZE("seeds", "train", train.seed),
      RVC_SIZE("seeds", "backbone", backbone_seed),
      Entry{"output", "dir", [](const ExperimentConfig& c) { return c.output_dir; },
            [](ExperimentConfig& c, const std::string&, const std::string& v) {
              c.output_dir = trim(v);
            }},
  };
  return entries;
}

#undef RVC_DOUBLE
#undef RVC_SIZE
#undef RVC_INT

void set_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string full = section + "." + key;
  for (const Entry& e : registry()) {
    if (section == e.section && key == e.key) {
      e.set(cfg, full, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + full + "'");
}

void check_config(const ExperimentConfig& cfg) {
  validate(cfg.range);
  if (cfg.frame.detections.fp_rate < 0 || cfg.frame.detections.fp_rate >= 1) {
    throw ConfigError("detections.fp_rate must be in [0, 1)");
  }
  if (cfg.train.val_fraction <= 0 || cfg.train.val_fraction >= 1) {
    throw ConfigError("train.val_fraction must be in (0, 1)");
  }
  if (cfg.train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (cfg.train.adam.lr <= 0) throw ConfigError("train.lr must be positive");
  cfg.classifier.validate();
}

FrameConfig frame_config(const ExperimentConfig& cfg) {
  FrameConfig fc = cfg.frame;
  fc.scene.range = cfg.range;
  return fc;
}

GridConfig heatmap_grid(const ExperimentConfig& cfg) {
  GridConfig g = cfg.grid();
  if (!g.pillar_mode()) throw ConfigError("grid.voxel z must span the z range for heatmaps");
  return g;
}

std::string frame_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.rvc", prefix, i);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config.

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) set_value(cfg, section, key, value.data());
  }
  check_config(cfg);
  return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string current;
  for (const Entry& e : registry()) {
    if (current != e.section) {
      if (!current.empty()) out += "\n";
      current = e.section;
      out += "[" + current + "]\n";
    }
    out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  }
  return out;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_text_file(path));
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not section.key=value");
  }
  set_value(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            assignment.substr(eq + 1));
  check_config(cfg);
}

// ---------------------------------------------------------------------------
// synth

SynthSummary cmd_synth(const ExperimentConfig& cfg, std::size_t count, const fs::path& out_dir) {
  check_config(cfg);
  const GridConfig grid = heatmap_grid(cfg);
  const FrameConfig fc = frame_config(cfg);
  ensure_dir(out_dir);
  const std::vector<Frame> frames = make_frames(fc, grid, cfg.frame_seed, count);
  SynthSummary s;
  s.scenes = count;
  for (std::size_t i = 0; i < count; ++i) {
    const Frame& f = frames[i];
    Rng seeds = Rng(cfg.frame_seed).fork(i);
    seeds.next_u64();
    seeds.next_u64();
    SyntheticScene seed_holder;
    seed_holder.seed = seeds.next_u64();

    const fs::path scene_path = out_dir / frame_name("scene", i);
    const fs::path dets_path = out_dir / frame_name("dets", i);
    save_scene_file(scene_path, &f.scene, nullptr);
    save_scene_file(dets_path, &seed_holder, &f.dets);
    s.files.push_back(scene_path);
    s.files.push_back(dets_path);
    s.points += f.scene.cloud.size();
    s.gt_boxes += f.scene.gt.size();
    s.detections += f.dets.size();
    for (auto tp : f.dets.is_tp) s.false_positives += tp ? 0 : 1;
  }
  return s;
}

std::vector<Frame> load_frames(const fs::path& dir, const ExperimentConfig& cfg) {
  if (!fs::is_directory(dir)) throw DataError("scene directory not found: " + dir.string());
  const GridConfig grid = heatmap_grid(cfg);
  std::vector<Frame> frames;
  for (std::size_t i = 0;; ++i) {
    const fs::path scene_path = dir / frame_name("scene", i);
    const fs::path dets_path = dir / frame_name("dets", i);
    if (!fs::exists(scene_path)) break;
    if (!fs::exists(dets_path)) throw DataError("missing " + dets_path.string());
    Frame f;
    f.scene = load_scene_file(scene_path).scene;
    SceneFile d = load_scene_file(dets_path);
    f.dets = std::move(d.detections);
    DetectorHeatmapConfig hc = cfg.frame.heatmap;
    hc.seed = d.scene.seed;
    f.heatmap = simulate_detector_heatmap(f.scene, f.dets.dets, f.dets.is_tp, f.dets.gt_index,
                                          grid, hc);
    frames.push_back(std::move(f));
  }
  if (frames.empty()) throw DataError("no scene_0000.rvc in " + dir.string());
  return frames;
}

// ---------------------------------------------------------------------------
// voxelize

std::string VoxelizeSummary::to_json() const {
  nlohmann::ordered_json j;
  j["points_in"] = points_in;
  j["points_skipped"] = points_skipped;
  j["pillars"] = pillars;
  j["max_occupancy"] = max_occupancy;
  j["assign_ms"] = assign_ms;
  j["features_ms"] = features_ms;
  return j.dump(2);
}

PointCloud load_cloud_any(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("input not found: " + path.string());
  const std::string ext = path.extension().string();
  PointCloud cloud;
  if (ext == ".bin") {
    cloud = load_kitti_bin(path);
  } else if (ext == ".csv") {
    cloud = load_csv(path);
  } else if (ext == ".rvc") {
    cloud = load_scene_file(path).scene.cloud;
  } else {
    throw ConfigError("unsupported input extension '" + ext + "' (expected .bin, .csv, .rvc)");
  }
  validate(cloud);
  return cloud;
}

VoxelizeSummary cmd_voxelize(const PointCloud& cloud, const GridConfig& grid,
                             const VoxelizeOutputs& outputs, std::uint64_t backbone_seed) {
  validate(cloud);
  VoxelizeSummary s;
  auto t0 = Clock::now();
  const PillarAssignment a = assign_pillars(cloud, grid);
  s.assign_ms = 1e3 * seconds_since(t0);
  t0 = Clock::now();
  const FdvFeatures f = fdv_features(cloud, a, grid);
  s.features_ms = 1e3 * seconds_since(t0);

  s.points_in = cloud.size();
  s.points_skipped = a.skipped();
  s.pillars = a.pillar_count();
  for (auto n : a.occupancy) s.max_occupancy = std::max(s.max_occupancy, n);

  if (!outputs.pillars_csv.empty()) {
    write_text_file(outputs.pillars_csv, format_pillar_dump(a, f, grid));
  }
  if (!outputs.features_csv.empty()) {
    write_text_file(outputs.features_csv, format_feature_dump(a, f));
  }
  if (!outputs.bev_bin.empty()) {
    const RvBackbone net = make_backbone(backbone_seed);
    const Matrix pillars = rv_backbone_forward(f, a, net);
    const auto maps = scatter_to_bev(pillars, a, grid, cloud.batch_count());
    Checkpoint ckpt;
    ckpt.metadata = "kind=bev";
    for (const FeatureMap& m : maps) {
      CheckpointTensor t;
      t.shape = {static_cast<std::uint32_t>(m.channels), static_cast<std::uint32_t>(m.height),
                 static_cast<std::uint32_t>(m.width)};
      t.data = m.data;
      ckpt.tensors.push_back(std::move(t));
    }
    save_checkpoint(outputs.bev_bin, ckpt);
  }
  return s;
}

// ---------------------------------------------------------------------------
// train-subhead

TrainSummary cmd_train_subhead(const ExperimentConfig& cfg, const fs::path& out_dir) {
  check_config(cfg);
  const GridConfig grid = heatmap_grid(cfg);
  ensure_dir(out_dir);

  std::vector<ClassifierKind> kinds = cfg.ablation_kinds;
  if (kinds.empty()) kinds.push_back(cfg.classifier.kind);
  std::vector<std::size_t> windows = cfg.ablation_windows;
  if (windows.empty()) windows.push_back(cfg.classifier.window);
  for (std::size_t k : windows) {
    if (k < 1 || k > kMaxWindow) {
      throw ConfigError("window " + std::to_string(k) + " outside 1.." + std::to_string(kMaxWindow));
    }
  }

  const std::vector<Frame> frames =
      make_frames(frame_config(cfg), grid, cfg.frame_seed, cfg.train_frames);

  TrainSummary summary;
  std::vector<Classifier> trained;
  for (std::size_t k : windows) {
    CropDatasetConfig dc;
    dc.window = k;
    dc.per_class = cfg.per_class;
    dc.seed = cfg.dataset_seed;
    const CropDataset ds = build_crop_dataset(frames, grid, dc);
    for (const auto& w : ds.warnings) summary.warnings.push_back("k=" + std::to_string(k) + ": " + w);

    for (ClassifierKind kind : kinds) {
      ClassifierSpec spec{kind, k, cfg.classifier.out_dim};
      try {
        spec.validate();
      } catch (const ConfigError& e) {
        summary.warnings.push_back(std::string(kind_name(kind)) + " k=" + std::to_string(k) +
                                   " skipped: " + e.what());
        continue;
      }
      TrainResult r = train_subhead(ds.crops, spec, cfg.train);
      for (const auto& w : r.warnings) summary.warnings.push_back(w);

      const std::string tag = std::string(kind_name(kind)) + "_k" + std::to_string(k);
      std::string curve = "epoch,train_loss,val_accuracy";
      for (std::size_t c = 0; c < spec.out_dim; ++c) curve += ",recall_" + std::to_string(c);
      curve += "\n";
      for (const EpochMetrics& m : r.curve) {
        curve += std::to_string(m.epoch) + "," + fmt_double(m.train_loss) + "," +
                 fmt_double(m.val_accuracy);
        for (double v : m.val_recall) curve += "," + (std::isnan(v) ? std::string() : fmt_double(v));
        curve += "\n";
      }
      write_text_file(out_dir / ("curve_" + tag + ".csv"), curve);
      save_checkpoint(out_dir / ("subhead_" + tag + ".ckpt"), classifier_to_checkpoint(r.classifier));

      AblationRow row{kind, k, r.final_val_accuracy(),
                      r.curve.empty() ? std::vector<double>{} : r.curve.back().val_recall};
      summary.rows.push_back(std::move(row));
      trained.push_back(std::move(r.classifier));
    }
  }
  if (summary.rows.empty()) throw ConfigError("no valid (kind, window) combination to train");

  for (std::size_t i = 1; i < summary.rows.size(); ++i) {
    if (summary.rows[i].val_accuracy > summary.rows[summary.best].val_accuracy) summary.best = i;
  }
  save_checkpoint(out_dir / "subhead.ckpt", classifier_to_checkpoint(trained[summary.best]));

  const std::size_t out_dim = cfg.classifier.out_dim;
  std::string csv = "kind,window,val_accuracy";
  for (std::size_t c = 0; c < out_dim; ++c) {
    csv += ",recall_";
    csv += out_dim == kNumCropLabels ? std::string(crop_label_name(static_cast<int>(c)))
                                     : std::string(c == 0 ? "True" : "False");
  }
  csv += "\n";
  for (const AblationRow& r : summary.rows) {
    csv += std::string(kind_name(r.kind)) + "," + std::to_string(r.window) + "," +
           fmt_double(r.val_accuracy);
    for (double v : r.recall) csv += "," + (std::isnan(v) ? std::string() : fmt_double(v));
    csv += "\n";
  }
  for (char& ch : csv) {
    if (ch == ' ') ch = '_';
  }
  write_text_file(out_dir / "ablation.csv", csv);

  // Pivot: one row per kind, one column per window.
  std::ostringstream table;
  table << "Validation accuracy (%)\n";
  char cell[32];
  std::snprintf(cell, sizeof cell, "%-14s", "kind");
  table << cell;
  for (std::size_t k : windows) {
    std::snprintf(cell, sizeof cell, "%9s", ("k=" + std::to_string(k)).c_str());
    table << cell;
  }
  table << "\n";
  for (ClassifierKind kind : kinds) {
    std::snprintf(cell, sizeof cell, "%-14s", kind_name(kind));
    table << cell;
    for (std::size_t k : windows) {
      std::string v = "-";
      for (const AblationRow& r : summary.rows) {
        if (r.kind == kind && r.window == k) v = pct(r.val_accuracy);
      }
      std::snprintf(cell, sizeof cell, "%9s", v.c_str());
      table << cell;
    }
    table << "\n";
  }
  const AblationRow& best = summary.rows[summary.best];
  table << "best: " << kind_name(best.kind) << " k=" << best.window << " ("
        << pct(best.val_accuracy) << " %)\n";
  write_text_file(out_dir / "ablation_table.txt", table.str());
  return summary;
}

// ---------------------------------------------------------------------------
// eval

EvalSummary cmd_eval(std::span<const Frame> frames, const ExperimentConfig& cfg,
                     const Classifier* classifier, const fs::path& out_dir) {
  check_config(cfg);
  if (frames.empty()) throw DataError("no frames to evaluate");
  const GridConfig grid = heatmap_grid(cfg);

  std::vector<MatchResult> raw, points, score, refined;
  EvalSummary s;
  for (const Frame& f : frames) {
    const auto& dets = f.dets.dets;
    raw.push_back(match(dets, f.scene.gt));
    points.push_back(match(filter_by_points(dets, f.scene.cloud, cfg.point_threshold), f.scene.gt));
    score.push_back(match(filter_by_score(dets, cfg.score_threshold), f.scene.gt));
    if (classifier != nullptr) {
      const RefineResult r = refine(dets, f.heatmap, *classifier, grid);
      s.unclassified += r.unclassified;
      refined.push_back(match(r.kept, f.scene.gt));
    }
  }
  s.rows.push_back({"raw", precision_report(raw)});
  s.rows.push_back({"point_filter", precision_report(points)});
  s.rows.push_back({"score_filter", precision_report(score)});
  if (classifier != nullptr) s.rows.push_back({"refined", precision_report(refined)});

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text_file(out_dir / "report.csv", format_report_csv(s.rows));
    std::ostringstream txt;
    txt << "frames: " << frames.size() << "\n"
        << "match IoU threshold: " << fmt_double(kMatchIouThreshold) << "\n"
        << "point filter threshold: " << cfg.point_threshold << "\n"
        << "score filter threshold: " << fmt_double(cfg.score_threshold) << "\n";
    if (classifier != nullptr) {
      txt << "classifier: " << kind_name(classifier->spec.kind) << " k=" << classifier->spec.window
          << " out_dim=" << classifier->spec.out_dim << "\n"
          << "unclassified (outside grid): " << s.unclassified << "\n";
    }
    txt << "\n" << format_report_table(s.rows);
    write_text_file(out_dir / "report.txt", txt.str());
  }
  return s;
}

// ---------------------------------------------------------------------------
// bench

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("linear fit needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return 0;
  if (syy == 0) return 1;
  return sxy * sxy / (sxx * syy);
}

BenchResult run_bench(const std::vector<std::size_t>& sizes, std::size_t reps,
                      const GridConfig& grid, bool with_backbone, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("bench needs at least two sizes");
  if (reps < 5) throw ConfigError("bench needs at least 5 repetitions");
  if (!std::is_sorted(sizes.begin(), sizes.end()) || sizes.front() == 0) {
    throw ConfigError("bench sizes must be positive and ascending");
  }
  BenchResult res;
  res.sizes = sizes;
  std::vector<std::string> names = {"voxelize", "features", "voxelize+features"};
  if (with_backbone) names.push_back("backbone");
  for (const auto& n : names) res.stages.push_back(BenchStage{n, {}, 0, 0});
  const RvBackbone net = make_backbone(seed);

  for (std::size_t n : sizes) {
    Rng rng(seed ^ (0x9E3779B97F4A7C15ull * (n + 1)));
    PointCloud cloud;
    cloud.points.resize(n);
    cloud.batch_ids.assign(n, 0);
    for (Point& p : cloud.points) {
      p.x = static_cast<float>(rng.uniform(grid.range.min[0], grid.range.max[0]));
      p.y = static_cast<float>(rng.uniform(grid.range.min[1], grid.range.max[1]));
      p.z = static_cast<float>(rng.uniform(grid.range.min[2], grid.range.max[2]));
    }
    std::vector<std::vector<double>> times(names.size());
    for (std::size_t rep = 0; rep <= reps; ++rep) {
      auto t0 = Clock::now();
      const PillarAssignment a = assign_pillars(cloud, grid);
      const double ta = seconds_since(t0);
      t0 = Clock::now();
      const FdvFeatures f = fdv_features(cloud, a, grid);
      const double tf = seconds_since(t0);
      double tb = 0;
      if (with_backbone) {
        t0 = Clock::now();
        const Matrix out = rv_backbone_forward(f, a, net);
        tb = seconds_since(t0);
      }
      if (rep == 0) continue;  // warm-up
      times[0].push_back(ta);
      times[1].push_back(tf);
      times[2].push_back(ta + tf);
      if (with_backbone) times[3].push_back(tb);
    }
    for (std::size_t s = 0; s < names.size(); ++s) {
      auto& t = times[s];
      std::sort(t.begin(), t.end());
      const double med = t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
      res.stages[s].median_seconds.push_back(med);
    }
  }
  std::vector<double> xs(sizes.begin(), sizes.end());
  for (BenchStage& st : res.stages) {
    st.ratio = st.median_seconds.back() / std::max(st.median_seconds.front(), 1e-12);
    st.r_squared = linear_fit_r2(xs, st.median_seconds);
  }
  return res;
}

std::string BenchResult::to_text() const {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %12s %12s %12s\n", "stage", "points", "median_ms", "ns/point");
  o << buf;
  for (const BenchStage& st : stages) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%-20s %12zu %12.3f %12.2f\n", st.name.c_str(), sizes[i],
                    1e3 * st.median_seconds[i],
                    1e9 * st.median_seconds[i] / static_cast<double>(sizes[i]));
      o << buf;
    }
    std::snprintf(buf, sizeof buf, "%-20s time(%zu)/time(%zu) = %.3f, linear fit R^2 = %.4f\n",
                  st.name.c_str(), sizes.back(), sizes.front(), st.ratio, st.r_squared);
    o << buf;
  }
  return o.str();
}

std::string BenchResult::to_json() const {
  nlohmann::ordered_json j;
  j["sizes"] = sizes;
  j["stages"] = nlohmann::ordered_json::array();
  for (const BenchStage& st : stages) {
    nlohmann::ordered_json s;
    s["name"] = st.name;
    s["median_seconds"] = st.median_seconds;
    std::vector<double> ns;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      ns.push_back(1e9 * st.median_seconds[i] / static_cast<double>(sizes[i]));
    }
    s["ns_per_point"] = ns;
    s["ratio"] = st.ratio;
    s["r_squared"] = st.r_squared;
    j["stages"].push_back(s);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// report

std::string render_report(const std::string& csv_text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw DataError("report CSV is empty");
  const std::size_t cols = rows.front().size();
  std::vector<std::size_t> width(cols, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw DataError("report CSV line " + std::to_string(r + 1) + ": expected " +
                      std::to_string(cols) + " fields, got " + std::to_string(rows[r].size()));
    }
    for (std::size_t c = 0; c < cols; ++c) width[c] = std::max(width[c], rows[r][c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::string cell = rows[r][c].empty() ? "n/a" : rows[r][c];
      if (c + 1 < cols) cell.resize(std::max(width[c], std::size_t{3}) + 2, ' ');
      out += cell;
    }
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < cols; ++c) total += std::max(width[c], std::size_t{3}) + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

}  // namespace rvc
