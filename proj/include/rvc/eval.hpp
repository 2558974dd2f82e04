#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvc/cloudio.hpp"

namespace rvc {

inline constexpr double kMatchIouThreshold = 0.4;
inline constexpr int kPointFilterThreshold = 5;
inline constexpr double kScoreFilterThreshold = 0.3;

struct Vec2 {
  double x = 0;
  double y = 0;
};

// Counter-clockwise BEV footprint corners; l runs along the heading.
std::array<Vec2, 4> bev_corners(const GtBox& box);

// Area of a simple polygon (shoelace), positive for CCW order.
double polygon_area(std::span<const Vec2> poly);

// Clips `subject` against the convex CCW polygon `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject,
                              std::span<const Vec2> clip);

// Rotated BEV intersection-over-union. Zero-area boxes give 0.
double bev_iou(const GtBox& a, const GtBox& b);

// Inclusive test against the full rotated 3D box.
bool point_in_box(const Point& p, const GtBox& box);
std::size_t count_points_in_box(const PointCloud& cloud, const GtBox& box);

struct MatchResult {
  std::vector<std::uint8_t> det_tp;
  std::vector<int> det_gt;        // matched GT index or -1
  std::vector<double> det_iou;    // IoU with the matched GT, 0 otherwise
  std::vector<ObjectClass> det_class;
  std::vector<std::uint8_t> gt_matched;
  std::vector<ObjectClass> gt_class;

  std::size_t tp_count() const;
};

// Greedy score-ordered matching within each class. Each detection claims the
// unmatched GT with the highest IoU >= threshold; ties go to the lower GT
// index, equal scores to the lower detection index.
MatchResult match(std::span<const Detection> dets, std::span<const GtBox> gts,
                  double iou_thresh = kMatchIouThreshold);

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t gt = 0;

  std::optional<double> precision() const;
  std::optional<double> recall() const;
  ClassCounts& operator+=(const ClassCounts& o) {
    tp += o.tp;
    fp += o.fp;
    gt += o.gt;
    return *this;
  }
};

struct PrecisionReport {
  std::array<ClassCounts, kNumClasses> per_class{};
  ClassCounts overall;  // micro-average
};

PrecisionReport precision_report(std::span<const MatchResult> results);

std::vector<Detection> filter_by_points(std::span<const Detection> dets,
                                        const PointCloud& cloud,
                                        int threshold = kPointFilterThreshold);
std::vector<Detection> filter_by_score(
    std::span<const Detection> dets,
    double threshold = kScoreFilterThreshold);

struct ReportRow {
  std::string pipeline;
  PrecisionReport report;
};

// Rows = pipeline variants, columns = Overall / Vehicle / Pedestrian /
// Cyclist precision. Undefined precision prints as "n/a".
std::string format_report_table(std::span<const ReportRow> rows);
std::string format_report_csv(std::span<const ReportRow> rows);

}  // namespace rvc
