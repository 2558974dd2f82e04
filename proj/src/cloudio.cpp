#include "rvc/cloudio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "rvc/eval.hpp"

namespace rvc {

std::uint32_t PointCloud::batch_count() const {
  if (batch_ids.empty()) return 0;
  return *std::max_element(batch_ids.begin(), batch_ids.end()) + 1;
}

void validate(const PointCloud& cloud) {
  if (cloud.points.size() != cloud.batch_ids.size()) {
    throw DataError("point cloud has " + std::to_string(cloud.points.size()) +
                    " points but " + std::to_string(cloud.batch_ids.size()) +
                    " batch ids");
  }
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw DataError("non-finite value in point " + std::to_string(i));
    }
  }
  const std::uint32_t nb = cloud.batch_count();
  std::vector<std::uint8_t> seen(nb, 0);
  for (std::uint32_t b : cloud.batch_ids) seen[b] = 1;
  for (std::uint32_t b = 0; b < nb; ++b) {
    if (!seen[b]) {
      throw DataError("batch ids are not contiguous: batch " +
                      std::to_string(b) + " is empty");
    }
  }
}

const char* class_name(ObjectClass c) {
  switch (c) {
    case ObjectClass::kVehicle:
      return "Vehicle";
    case ObjectClass::kPedestrian:
      return "Pedestrian";
    case ObjectClass::kCyclist:
      return "Cyclist";
  }
  return "?";
}

ObjectClass class_from_index(int idx) {
  if (idx < 0 || idx >= kNumClasses) {
    throw DataError("class id out of range: " + std::to_string(idx));
  }
  return static_cast<ObjectClass>(idx);
}

void validate(const GtBox& b) {
  for (double v : {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw}) {
    if (!std::isfinite(v)) throw DataError("box has a non-finite field");
  }
  if (!(b.l > 0 && b.w > 0 && b.h > 0)) {
    throw DataError("box dimensions must be positive");
  }
  if (b.yaw < -kPi || b.yaw >= kPi) throw DataError("box yaw outside [-pi, pi)");
}

void validate(const CloudRange& range) {
  static const char* axes[] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(range.min[i]) || !std::isfinite(range.max[i]) ||
        !(range.min[i] < range.max[i])) {
      throw ConfigError(std::string("degenerate range on axis ") + axes[i]);
    }
  }
}

// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

float load_le_f32(const std::uint8_t* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                    (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) |
                    (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

void store_le_f32(float v, std::vector<std::uint8_t>& out) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(u >> s));
}

}  // namespace

PointCloud decode_kitti_bin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 16 != 0) {
    throw FormatError("KITTI bin size " + std::to_string(bytes.size()) +
                      " is not a multiple of 16 bytes");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.points.reserve(n);
  cloud.batch_ids.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + 16 * i;
    Point p{load_le_f32(rec), load_le_f32(rec + 4), load_le_f32(rec + 8),
            load_le_f32(rec + 12)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw DataError("non-finite value in KITTI record " + std::to_string(i));
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<std::uint8_t> encode_kitti_bin(const PointCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  for (const Point& p : cloud.points) {
    store_le_f32(p.x, out);
    store_le_f32(p.y, out);
    store_le_f32(p.z, out);
    store_le_f32(p.intensity, out);
  }
  return out;
}

PointCloud load_kitti_bin(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return decode_kitti_bin(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

void save_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto bytes = encode_kitti_bin(cloud);
  write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

PointCloud parse_csv(const std::string& text) {
  PointCloud cloud;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    std::uint32_t batch = 0;
    if (line_no == 1 && !parse_number(fields[0], batch)) {
      double probe;
      if (!parse_number(fields[0], probe)) continue;  // header row
    }
    if (fields.size() != 4 && fields.size() != 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected 4 or 5 fields, got " +
                      std::to_string(fields.size()));
    }
    float v[4] = {0, 0, 0, 0};
    bool ok = parse_number(fields[0], batch);
    for (std::size_t k = 1; k < fields.size() && ok; ++k) {
      ok = parse_number(fields[k], v[k - 1]) && std::isfinite(v[k - 1]);
    }
    if (!ok) {
      throw DataError("line " + std::to_string(line_no) + ": cannot parse row");
    }
    cloud.push_back(Point{v[0], v[1], v[2], v[3]}, batch);
  }
  validate(cloud);
  return cloud;
}

PointCloud load_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path));
}

PointCloud filter_range(const PointCloud& cloud, const CloudRange& range) {
  validate(range);
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (range.contains(p.x, p.y, p.z)) out.push_back(p, cloud.batch_ids[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data.

std::array<double, 3> sample_class_dims(ObjectClass cls, Rng& rng) {
  switch (cls) {
    case ObjectClass::kVehicle:
      return {rng.normal(4.5, 0.3), rng.normal(1.9, 0.1), rng.normal(1.6, 0.1)};
    case ObjectClass::kPedestrian:
      return {rng.normal(0.8, 0.05), rng.normal(0.8, 0.05), rng.normal(1.75, 0.08)};
    case ObjectClass::kCyclist:
      return {rng.normal(1.8, 0.1), rng.normal(0.6, 0.04), rng.normal(1.7, 0.08)};
  }
  return {1, 1, 1};
}

namespace {

constexpr int kPlacementAttempts = 1000;
constexpr double kPlacementGap = 0.5;

double footprint_radius(const GtBox& b) { return 0.5 * std::hypot(b.l, b.w); }

GtBox random_box(ObjectClass cls, const CloudRange& range, Rng& rng) {
  GtBox b;
  b.cls = cls;
  const auto dims = sample_class_dims(cls, rng);
  b.l = dims[0];
  b.w = dims[1];
  b.h = dims[2];
  b.yaw = wrap_angle(rng.uniform(-kPi, kPi));
  const double r = footprint_radius(b);
  b.cx = rng.uniform(range.min[0] + r, range.max[0] - r);
  b.cy = rng.uniform(range.min[1] + r, range.max[1] - r);
  b.cz = 0.5 * b.h;  // resting on the ground plane
  return b;
}

bool overlaps_any(const GtBox& b, const std::vector<GtBox>& placed) {
  for (const auto& o : placed) {
    if (std::hypot(b.cx - o.cx, b.cy - o.cy) <
        footprint_radius(b) + footprint_radius(o) + kPlacementGap) {
      return true;
    }
  }
  return false;
}

// Points on the four side faces and the roof, area-weighted, plus noise.
void sample_box_surface(const GtBox& b, int n, double noise, Rng& rng,
                        PointCloud& out) {
  const double side_l = b.l * b.h;
  const double side_w = b.w * b.h;
  const double top = b.l * b.w;
  const double total = 2 * side_l + 2 * side_w + top;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    double lx, ly, lz;
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform() - 0.5;
    if (pick < 2 * side_l) {
      lx = u * b.l;
      ly = (pick < side_l ? 0.5 : -0.5) * b.w;
      lz = v * b.h;
    } else if (pick < 2 * side_l + 2 * side_w) {
      lx = (pick < 2 * side_l + side_w ? 0.5 : -0.5) * b.l;
      ly = u * b.w;
      lz = v * b.h;
    } else {
      lx = u * b.l;
      ly = v * b.w;
      lz = 0.5 * b.h;
    }
    const double x = b.cx + c * lx - s * ly + rng.normal(0.0, noise);
    const double y = b.cy + s * lx + c * ly + rng.normal(0.0, noise);
    const double z = b.cz + lz + rng.normal(0.0, noise);
    out.push_back(Point{static_cast<float>(x), static_cast<float>(y),
                        static_cast<float>(z),
                        static_cast<float>(rng.uniform(0.2, 0.9))});
  }
}

void check_counts(const SceneConfig& c) {
  if (c.n_objects < 0 || c.points_per_object < 0 || c.ground_points < 0 ||
      c.clutter_objects < 0 || c.points_per_clutter < 0) {
    throw ConfigError("scene counts must be non-negative");
  }
  if (!(c.noise_std >= 0) || !std::isfinite(c.noise_std)) {
    throw ConfigError("noise_std must be finite and non-negative");
  }
}

}  // namespace

SyntheticScene synth_scene(const SceneConfig& config) {
  check_counts(config);
  validate(config.range);
  SyntheticScene scene;
  scene.seed = config.seed;
  Rng place_rng(config.seed);
  Rng point_rng = place_rng.fork(1);

  std::vector<GtBox> placed;
  auto place = [&](ObjectClass cls) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      GtBox b = random_box(cls, config.range, place_rng);
      if (!overlaps_any(b, placed)) {
        placed.push_back(b);
        return b;
      }
    }
    throw GenerationError("cannot place object " + std::to_string(placed.size()) +
                          " without overlap after " +
                          std::to_string(kPlacementAttempts) + " attempts");
  };
  for (int i = 0; i < config.n_objects; ++i) {
    scene.gt.push_back(place(class_from_index(static_cast<int>(place_rng.below(kNumClasses)))));
  }
  for (int i = 0; i < config.clutter_objects; ++i) {
    GtBox b = place(class_from_index(static_cast<int>(place_rng.below(kNumClasses))));
    // Clutter is taller or squatter than real objects of the same footprint.
    b.h *= place_rng.uniform(0.5, 1.5);
    b.cz = 0.5 * b.h;
    scene.clutter.push_back(b);
  }

  const auto& r = config.range;
  for (int i = 0; i < config.ground_points; ++i) {
    const double x = point_rng.uniform(r.min[0], r.max[0]);
    const double y = point_rng.uniform(r.min[1], r.max[1]);
    const double z = point_rng.normal(0.0, config.noise_std);
    scene.cloud.push_back(Point{static_cast<float>(x), static_cast<float>(y),
                                static_cast<float>(z),
                                static_cast<float>(point_rng.uniform(0.0, 0.3))});
  }
  for (const auto& b : scene.gt) {
    sample_box_surface(b, config.points_per_object, config.noise_std, point_rng,
                       scene.cloud);
  }
  for (const auto& b : scene.clutter) {
    sample_box_surface(b, config.points_per_clutter, config.noise_std, point_rng,
                       scene.cloud);
  }
  return scene;
}

namespace {

double clamp_score(double s) { return std::clamp(s, 0.0, 1.0); }

void check_detection_config(const DetectionConfig& c) {
  if (!(c.fp_rate >= 0.0 && c.fp_rate < 1.0)) {
    throw ConfigError("fp_rate must lie in [0, 1)");
  }
  if (!(c.jitter_std >= 0.0) || !std::isfinite(c.jitter_std)) {
    throw ConfigError("jitter_std must be finite and non-negative");
  }
  if (!(c.fp_on_clutter >= 0.0 && c.fp_on_clutter <= 1.0)) {
    throw ConfigError("fp_on_clutter must lie in [0, 1]");
  }
  const auto& m = c.score_model;
  if (!(m.tp_std >= 0 && m.fp_std >= 0)) {
    throw ConfigError("score model deviations must be non-negative");
  }
}

}  // namespace

LabeledDetections synth_detections(const SyntheticScene& scene,
                                   const DetectionConfig& config) {
  check_detection_config(config);
  Rng rng(config.seed ^ (scene.seed * 0x9e3779b97f4a7c15ULL));
  LabeledDetections out;
  const auto& sm = config.score_model;

  for (std::size_t gi = 0; gi < scene.gt.size(); ++gi) {
    const GtBox& g = scene.gt[gi];
    GtBox d = g;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      d = g;
      d.cx += rng.normal(0.0, config.jitter_std);
      d.cy += rng.normal(0.0, config.jitter_std);
      d.cz += rng.normal(0.0, config.jitter_std);
      d.l *= 1.0 + rng.normal(0.0, 0.03);
      d.w *= 1.0 + rng.normal(0.0, 0.03);
      d.yaw = wrap_angle(d.yaw + rng.normal(0.0, 0.05));
      ok = d.l > 0 && d.w > 0 && bev_iou(d, g) >= 0.5;
    }
    if (!ok) d = g;
    out.dets.push_back({d, clamp_score(rng.normal(sm.tp_mean, sm.tp_std))});
    out.is_tp.push_back(1);
    out.gt_index.push_back(static_cast<int>(gi));
  }

  const std::size_t n_gt = scene.gt.size();
  const auto n_fp = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_gt) * config.fp_rate / (1.0 - config.fp_rate)));

  // Range implied by the scene: GT/clutter boxes plus the point cloud.
  CloudRange bounds{{0, 0, 0}, {0, 0, 0}};
  bool have_bounds = false;
  auto grow = [&](double x, double y) {
    if (!have_bounds) {
      bounds.min = {x, y, 0};
      bounds.max = {x, y, 0};
      have_bounds = true;
    }
    bounds.min[0] = std::min(bounds.min[0], x);
    bounds.min[1] = std::min(bounds.min[1], y);
    bounds.max[0] = std::max(bounds.max[0], x);
    bounds.max[1] = std::max(bounds.max[1], y);
  };
  for (const auto& g : scene.gt) grow(g.cx, g.cy);
  for (const auto& p : scene.cloud.points) grow(p.x, p.y);

  for (std::size_t k = 0; k < n_fp; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const auto cls = class_from_index(static_cast<int>(rng.below(kNumClasses)));
      GtBox b;
      b.cls = cls;
      const auto dims = sample_class_dims(cls, rng);
      b.l = dims[0];
      b.w = dims[1];
      b.h = dims[2];
      b.yaw = wrap_angle(rng.uniform(-kPi, kPi));
      const bool on_clutter =
          !scene.clutter.empty() && rng.uniform() < config.fp_on_clutter;
      if (on_clutter) {
        const GtBox& c = scene.clutter[rng.below(scene.clutter.size())];
        b.cx = c.cx + rng.normal(0.0, 0.2);
        b.cy = c.cy + rng.normal(0.0, 0.2);
      } else if (have_bounds) {
        b.cx = rng.uniform(bounds.min[0], bounds.max[0]);
        b.cy = rng.uniform(bounds.min[1], bounds.max[1]);
      } else {
        b.cx = rng.uniform(-10.0, 10.0);
        b.cy = rng.uniform(-10.0, 10.0);
      }
      b.cz = 0.5 * b.h;
      placed = std::all_of(scene.gt.begin(), scene.gt.end(), [&](const GtBox& g) {
        return bev_iou(b, g) < kMatchIouThreshold;
      });
      if (placed) {
        out.dets.push_back({b, clamp_score(rng.normal(sm.fp_mean, sm.fp_std))});
        out.is_tp.push_back(0);
        out.gt_index.push_back(-1);
      }
    }
    if (!placed) {
      throw GenerationError("cannot place false positive " + std::to_string(k));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// rvc-scene v1

namespace {

template <typename T>
void put_num(std::string& s, T v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  s.append(buf, ptr);
}

void put_box(std::string& s, const GtBox& b) {
  put_num(s, static_cast<int>(b.cls));
  for (double v : {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw}) {
    s.push_back(' ');
    put_num(s, v);
  }
}

}  // namespace

std::string format_scene_file(const SyntheticScene* scene,
                              const LabeledDetections* dets) {
  std::string s = kSceneHeader;
  s.push_back('\n');
  if (scene != nullptr) {
    s += "seed ";
    put_num(s, scene->seed);
    s.push_back('\n');
    for (std::size_t i = 0; i < scene->cloud.size(); ++i) {
      const Point& p = scene->cloud.points[i];
      s += "point ";
      put_num(s, scene->cloud.batch_ids[i]);
      for (float v : {p.x, p.y, p.z, p.intensity}) {
        s.push_back(' ');
        put_num(s, v);
      }
      s.push_back('\n');
    }
    for (const auto& b : scene->gt) {
      s += "gt ";
      put_box(s, b);
      s.push_back('\n');
    }
    for (const auto& b : scene->clutter) {
      s += "clutter ";
      put_box(s, b);
      s.push_back('\n');
    }
  }
  if (dets != nullptr) {
    for (std::size_t i = 0; i < dets->size(); ++i) {
      s += "det ";
      put_box(s, dets->dets[i].box);
      s.push_back(' ');
      put_num(s, dets->dets[i].score);
      s.push_back(' ');
      put_num(s, static_cast<int>(dets->is_tp[i]));
      s.push_back(' ');
      put_num(s, dets->gt_index[i]);
      s.push_back('\n');
    }
  }
  return s;
}

SceneFile parse_scene_file(const std::string& text) {
  SceneFile f;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (!header_seen) {
      if (line != kSceneHeader) {
        throw FormatError("missing '" + std::string(kSceneHeader) + "' header");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    auto fail = [&]() -> void {
      throw DataError("scene line " + std::to_string(line_no) + ": malformed '" +
                      std::string(tok[0]) + "' record");
    };
    auto read_box = [&](std::size_t at, GtBox& b) {
      int cls = 0;
      if (!parse_number(tok[at], cls) || cls < 0 || cls >= kNumClasses) fail();
      b.cls = static_cast<ObjectClass>(cls);
      double* fields[] = {&b.cx, &b.cy, &b.cz, &b.l, &b.w, &b.h, &b.yaw};
      for (std::size_t k = 0; k < 7; ++k) {
        if (!parse_number(tok[at + 1 + k], *fields[k])) fail();
      }
      try {
        validate(b);
      } catch (const DataError&) {
        fail();
      }
    };
    if (tok[0] == "seed") {
      if (tok.size() != 2 || !parse_number(tok[1], f.scene.seed)) fail();
    } else if (tok[0] == "point") {
      if (tok.size() != 6) fail();
      std::uint32_t b = 0;
      Point p;
      if (!parse_number(tok[1], b) || !parse_number(tok[2], p.x) ||
          !parse_number(tok[3], p.y) || !parse_number(tok[4], p.z) ||
          !parse_number(tok[5], p.intensity)) {
        fail();
      }
      f.scene.cloud.push_back(p, b);
    } else if (tok[0] == "gt" || tok[0] == "clutter") {
      if (tok.size() != 9) fail();
      GtBox b;
      read_box(1, b);
      (tok[0] == "gt" ? f.scene.gt : f.scene.clutter).push_back(b);
    } else if (tok[0] == "det") {
      if (tok.size() != 12) fail();
      Detection d;
      read_box(1, d.box);
      int tp = 0;
      int gi = -1;
      if (!parse_number(tok[9], d.score) || !parse_number(tok[10], tp) ||
          !parse_number(tok[11], gi) || d.score < 0 || d.score > 1) {
        fail();
      }
      f.detections.dets.push_back(d);
      f.detections.is_tp.push_back(tp != 0 ? 1 : 0);
      f.detections.gt_index.push_back(gi);
    } else {
      fail();
    }
  }
  if (!header_seen) throw FormatError("empty scene file");
  validate(f.scene.cloud);
  return f;
}

void save_scene_file(const std::filesystem::path& path,
                     const SyntheticScene* scene,
                     const LabeledDetections* dets) {
  write_text_file(path, format_scene_file(scene, dets));
}

SceneFile load_scene_file(const std::filesystem::path& path) {
  return parse_scene_file(read_text_file(path));
}

}  // namespace rvc
