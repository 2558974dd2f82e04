#include "rvc/fdv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace rvc {

namespace {

constexpr const char* kAxisName[] = {"x", "y", "z"};
// Grids (times batches) up to this many cells use a flat lookup table.
constexpr std::size_t kDenseTableLimit = std::size_t{1} << 26;

}  // namespace

GridConfig compute_grid(const CloudRange& range, const std::array<double, 3>& voxel) {
  validate(range);
  GridConfig g;
  g.range = range;
  g.voxel = voxel;
  for (int i = 0; i < 3; ++i) {
    if (!(voxel[i] > 0) || !std::isfinite(voxel[i])) {
      throw ConfigError(std::string("voxel size must be positive on axis ") + kAxisName[i]);
    }
    const double ratio = (range.max[i] - range.min[i]) / voxel[i];
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-6 || rounded < 1 || rounded > 1e9) {
      throw ConfigError(std::string("extent on axis ") + kAxisName[i] +
                        " is not divisible by the voxel size (ratio " +
                        std::to_string(ratio) + ")");
    }
    g.size[i] = static_cast<std::uint32_t>(rounded);
  }
  return g;
}

GridConfig compute_pillar_grid(const CloudRange& range, double voxel_x, double voxel_y) {
  validate(range);
  return compute_grid(range, {voxel_x, voxel_y, range.max[2] - range.min[2]});
}

std::uint32_t cell_of(double v, const GridConfig& grid, int axis) {
  const double f = std::floor((v - grid.range.min[axis]) / grid.voxel[axis]);
  if (f <= 0) return 0;
  const auto last = grid.size[axis] - 1;
  return f >= last ? last : static_cast<std::uint32_t>(f);
}

PillarAssignment assign_pillars(const PointCloud& cloud, const GridConfig& grid) {
  if (cloud.batch_ids.size() != cloud.points.size()) {
    throw DataError("point cloud batch ids do not match its points");
  }
  const std::size_t n = cloud.size();
  const std::uint64_t cells = grid.cell_count();
  constexpr std::uint64_t kOut = ~std::uint64_t{0};

  // Pass 1 (parallel): linear cell key per point.
  std::vector<std::uint64_t> key(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Point& p = cloud.points[i];
      if (!grid.range.contains(p.x, p.y, p.z)) {
        key[i] = kOut;
        continue;
      }
      const std::uint64_t col = cell_of(p.x, grid, 0);
      const std::uint64_t row = cell_of(p.y, grid, 1);
      const std::uint64_t layer = cell_of(p.z, grid, 2);
      key[i] = ((cloud.batch_ids[i] * std::uint64_t{grid.size[2]} + layer) * grid.size[1] +
                row) * grid.size[0] + col;
    }
  });

  // Pass 2 (sequential): first-occurrence ordinals.
  PillarAssignment a;
  a.pillar_of_point.assign(n, kSkipped);
  const std::uint64_t batches = std::max<std::uint32_t>(cloud.batch_count(), 1);
  const bool dense = batches * cells <= kDenseTableLimit;
  std::vector<std::uint32_t> table;
  std::unordered_map<std::uint64_t, std::uint32_t> map;
  if (dense) {
    table.assign(static_cast<std::size_t>(batches * cells), kSkipped);
  }
  a.kept_points.reserve(n);
  a.feature_index.index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t k = key[i];
    if (k == kOut) continue;
    std::uint32_t* slot;
    if (dense) {
      slot = &table[k];
    } else {
      slot = &map.try_emplace(k, kSkipped).first->second;
    }
    if (*slot == kSkipped) {
      *slot = static_cast<std::uint32_t>(a.coords.size());
      std::uint64_t rest = k;
      VoxelCoord c;
      c.col = static_cast<std::uint32_t>(rest % grid.size[0]);
      rest /= grid.size[0];
      c.row = static_cast<std::uint32_t>(rest % grid.size[1]);
      rest /= grid.size[1];
      c.layer = static_cast<std::uint32_t>(rest % grid.size[2]);
      c.batch = static_cast<std::uint32_t>(rest / grid.size[2]);
      a.coords.push_back(c);
      a.occupancy.push_back(0);
    }
    a.pillar_of_point[i] = *slot;
    ++a.occupancy[*slot];
    a.kept_points.push_back(static_cast<std::uint32_t>(i));
    a.feature_index.index.push_back(*slot);
  }
  a.feature_index.dim_size = a.coords.size();
  return a;
}

FdvFeatures fdv_features(const PointCloud& cloud, const PillarAssignment& a,
                         const GridConfig& grid) {
  if (a.pillar_of_point.size() != cloud.size() ||
      a.feature_index.index.size() != a.kept_points.size() ||
      a.occupancy.size() != a.coords.size()) {
    throw Error("pillar assignment does not belong to this point cloud");
  }
  const std::size_t m = a.kept_points.size();
  Matrix xyz(m, 3);
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const Point& p = cloud.points[a.kept_points[r]];
      xyz(r, 0) = p.x;
      xyz(r, 1) = p.y;
      xyz(r, 2) = p.z;
    }
  });
  SegmentResult mean = scatter_mean(xyz, a.feature_index);

  FdvFeatures out;
  out.features = Matrix(m, kFdvChannels);
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const std::uint32_t pillar = a.feature_index.index[r];
      const VoxelCoord& c = a.coords[pillar];
      const double center[3] = {grid.center(0, c.col), grid.center(1, c.row),
                                grid.center(2, c.layer)};
      double* f = out.features.data.data() + r * kFdvChannels;
      for (int k = 0; k < 3; ++k) {
        const double v = xyz(r, k);
        f[k] = v;
        f[3 + k] = v - center[k];
        f[6 + k] = v - mean.values(pillar, k);
      }
    }
  });
  out.pillar_mean = std::move(mean.values);
  return out;
}

std::vector<std::size_t> canonical_order(const PillarAssignment& a) {
  std::vector<std::size_t> order(a.pillar_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a.coords[x] < a.coords[y];
  });
  return order;
}

namespace {

template <typename T>
void put(std::string& s, T v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  s.append(buf, ptr);
}

}  // namespace

std::string format_pillar_dump(const PillarAssignment& a, const FdvFeatures& f,
                               const GridConfig& grid) {
  std::string s = grid.pillar_mode() ? "batch,row,col,count,mean_x,mean_y,mean_z\n"
                                     : "batch,layer,row,col,count,mean_x,mean_y,mean_z\n";
  for (std::size_t p : canonical_order(a)) {
    const VoxelCoord& c = a.coords[p];
    put(s, c.batch);
    s.push_back(',');
    if (!grid.pillar_mode()) {
      put(s, c.layer);
      s.push_back(',');
    }
    put(s, c.row);
    s.push_back(',');
    put(s, c.col);
    s.push_back(',');
    put(s, a.occupancy[p]);
    for (int k = 0; k < 3; ++k) {
      s.push_back(',');
      put(s, f.pillar_mean(p, static_cast<std::size_t>(k)));
    }
    s.push_back('\n');
  }
  return s;
}

std::string format_feature_dump(const PillarAssignment& a, const FdvFeatures& f) {
  std::string s =
      "point,pillar,x,y,z,x_center,y_center,z_center,x_mean,y_mean,z_mean\n";
  for (std::size_t r = 0; r < a.kept_points.size(); ++r) {
    put(s, a.kept_points[r]);
    s.push_back(',');
    put(s, a.feature_index.index[r]);
    for (std::size_t k = 0; k < kFdvChannels; ++k) {
      s.push_back(',');
      put(s, f.features(r, k));
    }
    s.push_back('\n');
  }
  return s;
}

}  // namespace rvc
