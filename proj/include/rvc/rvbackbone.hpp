#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rvc/checkpoint.hpp"
#include "rvc/fdv.hpp"
#include "rvc/scatter.hpp"

namespace rvc {

// Linear layer of a pillar feature net: out = ReLU(W x + b).
struct PfnLayerSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  void check() const;
};

// Weights and biases uniform in [-1/sqrt(in), 1/sqrt(in)].
PfnLayerSpec random_pfn_layer(std::size_t in, std::size_t out, Rng& rng);

// Dense C x H x W map (BEV pseudo-image or heatmap), row-major.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

  double& at(std::size_t c, std::size_t r, std::size_t col) {
    return data[(c * height + r) * width + col];
  }
  double at(std::size_t c, std::size_t r, std::size_t col) const {
    return data[(c * height + r) * width + col];
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

struct PfnOutput {
  Matrix per_point;   // kept points x out
  Matrix per_pillar;  // pillars x out, scatter-max over member points
};

PfnOutput pfn_stage(const Matrix& features, const PillarAssignment& assignment,
                    const PfnLayerSpec& spec);

struct RvBackbone {
  std::array<PfnLayerSpec, 2> stages;
};

// Default channel plan 9 -> 32, then (32 + 32) -> 64.
RvBackbone make_backbone(std::uint64_t seed, std::size_t hidden = 32,
                         std::size_t out = 64);

// Stage 1 on the FDV features, its pillar max broadcast back to member
// points and concatenated with the per-point output, stage 2 on the
// concatenation, final scatter-max per pillar.
Matrix rv_backbone_forward(const FdvFeatures& fdv, const PillarAssignment& assignment,
                           const RvBackbone& net);

// One map per batch id. In voxel mode layers stack into channels
// (channel = layer * C + c). batch_count 0 infers it from the pillars
// (at least one map).
std::vector<FeatureMap> scatter_to_bev(const Matrix& pillar_features,
                                       const PillarAssignment& assignment,
                                       const GridConfig& grid,
                                       std::size_t batch_count = 0);

Checkpoint backbone_to_checkpoint(const RvBackbone& net);
RvBackbone backbone_from_checkpoint(const Checkpoint& ckpt);

}  // namespace rvc
