#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "oracles.hpp"
#include "rvc/cloudio.hpp"
#include "rvc/eval.hpp"

using namespace rvc;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> float_bytes(std::initializer_list<float> vals) {
  std::vector<std::uint8_t> out(vals.size() * 4);
  std::size_t i = 0;
  for (float v : vals) {
    std::memcpy(out.data() + 4 * i, &v, 4);
    ++i;
  }
  return out;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rvc_test_cloudio";
  fs::create_directories(dir);
  return dir / name;
}

SceneConfig small_scene(std::uint64_t seed) {
  SceneConfig c;
  c.n_objects = 10;
  c.points_per_object = 40;
  c.ground_points = 300;
  c.clutter_objects = 3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("KITTI decode of two records keeps order") {
  const auto bytes = float_bytes({1, 2, 3, 0.5f, 4, 5, 6, 0});
  REQUIRE(bytes.size() == 32);
  const PointCloud c = decode_kitti_bin(bytes);
  REQUIRE(c.size() == 2);
  CHECK(c.points[0].x == 1.f);
  CHECK(c.points[0].y == 2.f);
  CHECK(c.points[0].z == 3.f);
  CHECK(c.points[0].intensity == 0.5f);
  CHECK(c.points[1].x == 4.f);
  CHECK(c.points[1].intensity == 0.f);
  CHECK(c.batch_ids == std::vector<std::uint32_t>{0, 0});
}

TEST_CASE("KITTI empty input and misaligned size") {
  CHECK(decode_kitti_bin({}).empty());
  std::vector<std::uint8_t> bad(17, 0);
  CHECK_THROWS_AS(decode_kitti_bin(bad), FormatError);
}

TEST_CASE("KITTI non-finite value reports the record") {
  const auto bytes = float_bytes({1, 2, 3, 0, 4, std::nanf(""), 6, 0});
  try {
    decode_kitti_bin(bytes);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("record 1") != std::string::npos);
  }
}

TEST_CASE("KITTI file round trip is byte exact") {
  Rng rng(5);
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 64; ++i) {
    const auto rec = float_bytes({static_cast<float>(rng.normal(0, 10)),
                                  static_cast<float>(rng.normal(0, 10)),
                                  static_cast<float>(rng.normal(0, 2)),
                                  static_cast<float>(rng.uniform())});
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  const PointCloud c = decode_kitti_bin(bytes);
  CHECK(encode_kitti_bin(c) == bytes);
  const fs::path p = temp_path("rt.bin");
  save_kitti_bin(p, c);
  const PointCloud back = load_kitti_bin(p);
  CHECK(encode_kitti_bin(back) == bytes);
}

TEST_CASE("CSV rows, optional intensity, header and errors") {
  PointCloud c = parse_csv("0,1.0,2.0,3.0\n");
  REQUIRE(c.size() == 1);
  CHECK(c.points[0].x == 1.f);
  CHECK(c.points[0].z == 3.f);
  CHECK(c.points[0].intensity == 0.f);

  c = parse_csv("0,1,2,3,0.9");
  REQUIRE(c.size() == 1);
  CHECK(c.points[0].intensity == doctest::Approx(0.9));

  c = parse_csv("batch_id,x,y,z\n0,1,2,3\n1,4,5,6\n");
  REQUIRE(c.size() == 2);
  CHECK(c.batch_ids[1] == 1);

  try {
    parse_csv("0,a,2,3");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("0,1,2\n"), DataError);
}

TEST_CASE("filter_range is half-open and idempotent") {
  PointCloud c;
  c.push_back({0.5f, 0.5f, 0.5f, 0});
  c.push_back({2, 0, 0, 0});
  c.push_back({1, 0.5f, 0.5f, 0});
  c.push_back({0, 0, 0, 0});
  const CloudRange r{{0, 0, 0}, {1, 1, 1}};
  const PointCloud f = filter_range(c, r);
  REQUIRE(f.size() == 2);
  CHECK(f.points[0].x == 0.5f);
  CHECK(f.points[1].x == 0.f);
  const PointCloud ff = filter_range(f, r);
  CHECK(ff.size() == f.size());
  CHECK(filter_range(PointCloud{}, r).empty());
  CHECK_THROWS_AS(filter_range(c, CloudRange{{0, 0, 0}, {1, 0, 1}}), ConfigError);
}

TEST_CASE("validate rejects gaps in batch ids") {
  PointCloud c;
  c.push_back({0, 0, 0, 0}, 0);
  c.push_back({0, 0, 0, 0}, 2);
  CHECK_THROWS_AS(validate(c), DataError);
}

TEST_CASE("synth_scene without objects") {
  SceneConfig cfg;
  cfg.n_objects = 0;
  cfg.ground_points = 100;
  const SyntheticScene s = synth_scene(cfg);
  CHECK(s.cloud.size() == 100);
  CHECK(s.gt.empty());
}

TEST_CASE("synth_scene is a pure function of its config") {
  const SyntheticScene a = synth_scene(small_scene(11));
  const SyntheticScene b = synth_scene(small_scene(11));
  CHECK(format_scene_file(&a, nullptr) == format_scene_file(&b, nullptr));
  const SyntheticScene c = synth_scene(small_scene(12));
  CHECK(format_scene_file(&a, nullptr) != format_scene_file(&c, nullptr));
}

TEST_CASE("every generated box holds points of its own cluster") {
  SceneConfig cfg;
  cfg.n_objects = 5;
  cfg.points_per_object = 50;
  cfg.ground_points = 0;
  cfg.seed = 4;
  const SyntheticScene s = synth_scene(cfg);
  REQUIRE(s.gt.size() == 5);
  for (const GtBox& b : s.gt) CHECK(count_points_in_box(s.cloud, b) >= 1);
}

TEST_CASE("synth_scene reports impossible placement") {
  SceneConfig cfg;
  cfg.n_objects = 500;
  cfg.range = CloudRange{{0, 0, -3}, {8, 8, 3}};
  CHECK_THROWS_AS(synth_scene(cfg), GenerationError);
}

TEST_CASE("synth_detections without false positives all match") {
  const SyntheticScene s = synth_scene(small_scene(2));
  DetectionConfig dc;
  dc.fp_rate = 0;
  dc.seed = 1;
  const LabeledDetections d = synth_detections(s, dc);
  CHECK(d.size() == s.gt.size());
  const MatchResult m = match(d.dets, s.gt);
  CHECK(m.tp_count() == d.size());
}

TEST_CASE("synth_detections injects the requested false positives") {
  const SyntheticScene s = synth_scene(small_scene(3));
  REQUIRE(s.gt.size() == 10);
  DetectionConfig dc;
  dc.fp_rate = 0.5;
  dc.seed = 9;
  const LabeledDetections d = synth_detections(s, dc);
  std::size_t fp = 0;
  for (auto t : d.is_tp) fp += t ? 0 : 1;
  CHECK(fp == 10);
  CHECK(d.size() == 20);

  const LabeledDetections again = synth_detections(s, dc);
  CHECK(format_scene_file(nullptr, &d) == format_scene_file(nullptr, &again));

  const MatchResult m = match(d.dets, s.gt);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(static_cast<bool>(m.det_tp[i]) == static_cast<bool>(d.is_tp[i]));
    if (d.is_tp[i]) CHECK(m.det_gt[i] == d.gt_index[i]);
  }
  for (const Detection& det : d.dets) {
    CHECK(det.score >= 0.0);
    CHECK(det.score <= 1.0);
  }
}

TEST_CASE("synth_detections rejects fp_rate of 1") {
  const SyntheticScene s = synth_scene(small_scene(3));
  DetectionConfig dc;
  dc.fp_rate = 1.0;
  CHECK_THROWS_AS(synth_detections(s, dc), ConfigError);
}

TEST_CASE("scene file round trip is lossless") {
  const SyntheticScene s = synth_scene(small_scene(21));
  DetectionConfig dc;
  dc.seed = 2;
  const LabeledDetections d = synth_detections(s, dc);
  const std::string text = format_scene_file(&s, &d);
  const SceneFile back = parse_scene_file(text);
  CHECK(format_scene_file(&back.scene, &back.detections) == text);
  CHECK(back.scene.seed == s.seed);
  REQUIRE(back.scene.cloud.size() == s.cloud.size());
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    CHECK(back.scene.cloud.points[i].x == s.cloud.points[i].x);
    CHECK(back.scene.cloud.points[i].intensity == s.cloud.points[i].intensity);
  }
  REQUIRE(back.scene.gt.size() == s.gt.size());
  for (std::size_t i = 0; i < s.gt.size(); ++i) {
    CHECK(back.scene.gt[i].cx == s.gt[i].cx);
    CHECK(back.scene.gt[i].yaw == s.gt[i].yaw);
    CHECK(back.scene.gt[i].cls == s.gt[i].cls);
  }
  REQUIRE(back.detections.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.detections.dets[i].score == d.dets[i].score);
    CHECK(back.detections.is_tp[i] == d.is_tp[i]);
    CHECK(back.detections.gt_index[i] == d.gt_index[i]);
  }
  const fs::path p = temp_path("scene.rvc");
  save_scene_file(p, &s, &d);
  const auto loaded = load_scene_file(p);
  CHECK(format_scene_file(&loaded.scene, &loaded.detections) == text);
}

TEST_CASE("scene file parse errors") {
  CHECK_THROWS_AS(parse_scene_file(""), FormatError);
  CHECK_THROWS_AS(parse_scene_file("not a scene\n"), FormatError);
  CHECK_THROWS_AS(parse_scene_file("rvc-scene v1\npoint 0 1 2\n"), DataError);
  CHECK_THROWS_AS(parse_scene_file("rvc-scene v1\nbogus 1\n"), DataError);
  CHECK_NOTHROW(parse_scene_file("rvc-scene v1\n"));
}
