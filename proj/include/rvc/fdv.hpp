#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rvc/cloudio.hpp"
#include "rvc/scatter.hpp"

namespace rvc {

// Voxel grid geometry. Pillar mode is the special case size[2] == 1, where
// each cell spans the whole vertical range.
struct GridConfig {
  CloudRange range;
  std::array<double, 3> voxel{1, 1, 1};
  std::array<std::uint32_t, 3> size{1, 1, 1};  // x (cols), y (rows), z (layers)

  bool pillar_mode() const { return size[2] == 1; }
  std::size_t cell_count() const {
    return std::size_t{size[0]} * size[1] * size[2];
  }
  // Cell center along one axis.
  double center(int axis, std::uint32_t i) const {
    return range.min[axis] + (static_cast<double>(i) + 0.5) * voxel[axis];
  }
};

// size_i = round(extent_i / voxel_i). Throws ConfigError naming the axis when
// the ratio is off an integer by more than 1e-6 or any extent/voxel is <= 0.
GridConfig compute_grid(const CloudRange& range, const std::array<double, 3>& voxel);
// Pillar grid: z voxel equals the full z extent.
GridConfig compute_pillar_grid(const CloudRange& range, double voxel_x, double voxel_y);

struct VoxelCoord {
  std::uint32_t batch = 0;
  std::uint32_t layer = 0;  // z index, always 0 in pillar mode
  std::uint32_t row = 0;    // y index
  std::uint32_t col = 0;    // x index

  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

inline constexpr std::uint32_t kSkipped = 0xFFFFFFFFu;

struct PillarAssignment {
  // Per input point: pillar ordinal, or kSkipped when out of range.
  std::vector<std::uint32_t> pillar_of_point;
  // Per pillar, in first-occurrence order.
  std::vector<VoxelCoord> coords;
  std::vector<std::size_t> occupancy;
  // Input indices of non-skipped points, ascending; row i of the feature
  // matrix belongs to point kept_points[i].
  std::vector<std::uint32_t> kept_points;
  // Pillar ordinal per kept point (scatter index over feature rows).
  SegmentIndex feature_index;

  std::size_t pillar_count() const { return coords.size(); }
  std::size_t skipped() const { return pillar_of_point.size() - kept_points.size(); }
};

// Cell index of one coordinate: floor((v - min) / voxel), clamped to the
// last cell so in-range values never leave the grid.
std::uint32_t cell_of(double v, const GridConfig& grid, int axis);

// Every in-range point is assigned to exactly one pillar; pillar ordinals
// follow first occurrence of (batch, layer, row, col) in input order.
PillarAssignment assign_pillars(const PointCloud& cloud, const GridConfig& grid);

inline constexpr std::size_t kFdvChannels = 9;

struct FdvFeatures {
  // Rows follow PillarAssignment::kept_points. Columns:
  // x, y, z, x - cell center (x, y, z), x - pillar mean (x, y, z).
  Matrix features;
  Matrix pillar_mean;  // pillar_count x 3
};

FdvFeatures fdv_features(const PointCloud& cloud, const PillarAssignment& assignment,
                         const GridConfig& grid);

// Pillar ordinals sorted by (batch, layer, row, col).
std::vector<std::size_t> canonical_order(const PillarAssignment& assignment);

// One line per pillar in canonical order:
//   pillar mode: batch,row,col,count,mean_x,mean_y,mean_z
//   voxel mode:  batch,layer,row,col,count,mean_x,mean_y,mean_z
std::string format_pillar_dump(const PillarAssignment& assignment,
                               const FdvFeatures& features, const GridConfig& grid);
// Per kept point: point,pillar,<9 feature columns>.
std::string format_feature_dump(const PillarAssignment& assignment,
                                const FdvFeatures& features);

}  // namespace rvc
