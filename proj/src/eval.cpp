#include "rvc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <tuple>

namespace rvc {

std::array<Vec2, 4> bev_corners(const GtBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.l;
  const double hw = 0.5 * box.w;
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.cx + c * local[i].x - s * local[i].y,
              box.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    acc += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  }
  return 0.5 * acc;
}

namespace {

inline double cross(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec2 edge_intersection(const Vec2& p, const Vec2& q, double dp, double dq) {
  const double t = dp / (dp - dq);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

bool axis_aligned(const GtBox& b) { return std::abs(b.yaw) < 1e-9; }

// Total order on boxes, so bev_iou always clips in the same direction.
auto box_key(const GtBox& b) {
  return std::make_tuple(b.cx, b.cy, b.l, b.w, b.yaw, b.cz, b.h);
}

}  // namespace

std::vector<Vec2> clip_convex(std::span<const Vec2> subject,
                              std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> input;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    input.swap(out);
    out.clear();
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& nxt = input[(i + 1) % input.size()];
      const double dc = cross(a, b, cur);
      const double dn = cross(a, b, nxt);
      if (dc >= 0) out.push_back(cur);
      if ((dc >= 0) != (dn >= 0)) out.push_back(edge_intersection(cur, nxt, dc, dn));
    }
  }
  return out;
}

double bev_iou(const GtBox& a_in, const GtBox& b_in) {
  const bool swap = box_key(b_in) < box_key(a_in);
  const GtBox& a = swap ? b_in : a_in;
  const GtBox& b = swap ? a_in : b_in;

  const double area_a = a.l * a.w;
  const double area_b = b.l * b.w;
  if (!(area_a > 0) || !(area_b > 0)) return 0.0;

  double inter = 0.0;
  if (axis_aligned(a) && axis_aligned(b)) {
    const double ix = std::min(a.cx + 0.5 * a.l, b.cx + 0.5 * b.l) -
                      std::max(a.cx - 0.5 * a.l, b.cx - 0.5 * b.l);
    const double iy = std::min(a.cy + 0.5 * a.w, b.cy + 0.5 * b.w) -
                      std::max(a.cy - 0.5 * a.w, b.cy - 0.5 * b.w);
    inter = std::max(0.0, ix) * std::max(0.0, iy);
  } else {
    const auto ca = bev_corners(a);
    const auto cb = bev_corners(b);
    // Circumscribed-circle rejection for far-apart pairs.
    const double ra = 0.5 * std::hypot(a.l, a.w);
    const double rb = 0.5 * std::hypot(b.l, b.w);
    if (std::hypot(a.cx - b.cx, a.cy - b.cy) > ra + rb) return 0.0;
    const auto poly = clip_convex(ca, cb);
    inter = std::max(0.0, polygon_area(poly));
  }
  const double uni = area_a + area_b - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool point_in_box(const Point& p, const GtBox& box) {
  const double dx = p.x - box.cx;
  const double dy = p.y - box.cy;
  const double dz = p.z - box.cz;
  if (std::abs(dz) > 0.5 * box.h) return false;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * box.l && std::abs(ly) <= 0.5 * box.w;
}

std::size_t count_points_in_box(const PointCloud& cloud, const GtBox& box) {
  const double r = 0.5 * std::hypot(box.l, box.w);
  std::size_t n = 0;
  for (const Point& p : cloud.points) {
    if (std::abs(p.x - box.cx) > r || std::abs(p.y - box.cy) > r) continue;
    if (point_in_box(p, box)) ++n;
  }
  return n;
}

std::size_t MatchResult::tp_count() const {
  return static_cast<std::size_t>(
      std::count(det_tp.begin(), det_tp.end(), std::uint8_t{1}));
}

MatchResult match(std::span<const Detection> dets, std::span<const GtBox> gts,
                  double iou_thresh) {
  MatchResult r;
  r.det_tp.assign(dets.size(), 0);
  r.det_gt.assign(dets.size(), -1);
  r.det_iou.assign(dets.size(), 0.0);
  r.gt_matched.assign(gts.size(), 0);
  for (const auto& d : dets) r.det_class.push_back(d.box.cls);
  for (const auto& g : gts) r.gt_class.push_back(g.cls);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  // Classes never interact, so one pass over the global order is the same
  // as a per-class pass.
  for (std::size_t di : order) {
    const GtBox& db = dets[di].box;
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (r.gt_matched[gi] || gts[gi].cls != db.cls) continue;
      const double iou = bev_iou(db, gts[gi]);
      if (iou >= iou_thresh && iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(gi);
      }
    }
    if (best >= 0) {
      r.gt_matched[static_cast<std::size_t>(best)] = 1;
      r.det_tp[di] = 1;
      r.det_gt[di] = best;
      r.det_iou[di] = best_iou;
    }
  }
  return r;
}

std::optional<double> ClassCounts::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> ClassCounts::recall() const {
  if (gt == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(gt);
}

PrecisionReport precision_report(std::span<const MatchResult> results) {
  PrecisionReport rep;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.det_tp.size(); ++i) {
      auto& c = rep.per_class[static_cast<std::size_t>(r.det_class[i])];
      if (r.det_tp[i]) {
        ++c.tp;
      } else {
        ++c.fp;
      }
    }
    for (ObjectClass g : r.gt_class) ++rep.per_class[static_cast<std::size_t>(g)].gt;
  }
  for (const auto& c : rep.per_class) rep.overall += c;
  return rep;
}

std::vector<Detection> filter_by_points(std::span<const Detection> dets,
                                        const PointCloud& cloud,
                                        int threshold) {
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    if (threshold <= 0 ||
        count_points_in_box(cloud, d.box) >= static_cast<std::size_t>(threshold)) {
      kept.push_back(d);
    }
  }
  return kept;
}

std::vector<Detection> filter_by_score(std::span<const Detection> dets,
                                       double threshold) {
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    if (d.score >= threshold) kept.push_back(d);
  }
  return kept;
}

namespace {

std::string pct(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f %%", 100.0 * *v);
  return buf;
}

std::string frac(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

std::string format_report_table(std::span<const ReportRow> rows) {
  std::size_t name_w = 8;
  for (const auto& r : rows) name_w = std::max(name_w, r.pipeline.size());
  std::ostringstream os;
  auto line = [&](const std::string& a, const std::string& b,
                  const std::string& c, const std::string& d,
                  const std::string& e) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%-*s | %10s | %10s | %10s | %10s\n",
                  static_cast<int>(name_w), a.c_str(), b.c_str(), c.c_str(),
                  d.c_str(), e.c_str());
    os << buf;
  };
  line("Pipeline", "Overall", "Vehicle", "Pedestrian", "Cyclist");
  os << std::string(name_w + 53, '-') << "\n";
  for (const auto& r : rows) {
    line(r.pipeline, pct(r.report.overall.precision()),
         pct(r.report.per_class[0].precision()),
         pct(r.report.per_class[1].precision()),
         pct(r.report.per_class[2].precision()));
  }
  return os.str();
}

std::string format_report_csv(std::span<const ReportRow> rows) {
  std::ostringstream os;
  os << "pipeline,scope,tp,fp,gt,precision,recall\n";
  for (const auto& r : rows) {
    auto emit = [&](const char* scope, const ClassCounts& c) {
      os << r.pipeline << ',' << scope << ',' << c.tp << ',' << c.fp << ','
         << c.gt << ',' << frac(c.precision()) << ',' << frac(c.recall())
         << "\n";
    };
    emit("overall", r.report.overall);
    for (int k = 0; k < kNumClasses; ++k) {
      emit(class_name(class_from_index(k)),
           r.report.per_class[static_cast<std::size_t>(k)]);
    }
  }
  return os.str();
}

}  // namespace rvc
