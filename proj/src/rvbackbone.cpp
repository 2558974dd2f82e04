#include "rvc/rvbackbone.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace rvc {

void PfnLayerSpec::check() const {
  if (in_channels == 0 || out_channels == 0) {
    throw ShapeError("PFN layer channels must be positive");
  }
  if (weights.size() != in_channels * out_channels || bias.size() != out_channels) {
    throw ShapeError("PFN layer weights do not match " + std::to_string(out_channels) +
                     "x" + std::to_string(in_channels));
  }
  for (double v : weights) {
    if (!std::isfinite(v)) throw ShapeError("PFN layer has non-finite weights");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw ShapeError("PFN layer has non-finite bias");
  }
}

PfnLayerSpec random_pfn_layer(std::size_t in, std::size_t out, Rng& rng) {
  PfnLayerSpec s;
  s.in_channels = in;
  s.out_channels = out;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  s.weights.resize(in * out);
  s.bias.resize(out);
  for (double& w : s.weights) w = rng.uniform(-bound, bound);
  for (double& b : s.bias) b = rng.uniform(-bound, bound);
  return s;
}

PfnOutput pfn_stage(const Matrix& features, const PillarAssignment& assignment,
                    const PfnLayerSpec& spec) {
  spec.check();
  if (features.cols != spec.in_channels) {
    throw ShapeError("PFN stage expects " + std::to_string(spec.in_channels) +
                     " channels, got " + std::to_string(features.cols));
  }
  if (features.rows != assignment.feature_index.index.size()) {
    throw ShapeError("feature rows do not match the assignment's kept points");
  }
  const std::size_t in = spec.in_channels;
  const std::size_t out = spec.out_channels;
  PfnOutput r;
  r.per_point = Matrix(features.rows, out);
  parallel_for(features.rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* x = features.data.data() + i * in;
      double* y = r.per_point.data.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = spec.weights.data() + o * in;
        double acc = spec.bias[o];
        for (std::size_t k = 0; k < in; ++k) acc += w[k] * x[k];
        y[o] = acc > 0.0 ? acc : 0.0;
      }
    }
  });
  r.per_pillar = scatter_max(r.per_point, assignment.feature_index).values;
  return r;
}

RvBackbone make_backbone(std::uint64_t seed, std::size_t hidden, std::size_t out) {
  Rng rng(seed);
  RvBackbone net;
  net.stages[0] = random_pfn_layer(kFdvChannels, hidden, rng);
  net.stages[1] = random_pfn_layer(2 * hidden, out, rng);
  return net;
}

Matrix rv_backbone_forward(const FdvFeatures& fdv, const PillarAssignment& assignment,
                           const RvBackbone& net) {
  if (net.stages[0].in_channels != kFdvChannels) {
    throw ShapeError("first PFN stage must take the 9 FDV channels");
  }
  if (net.stages[1].in_channels != 2 * net.stages[0].out_channels) {
    throw ShapeError("second PFN stage must take twice the first stage's width");
  }
  const PfnOutput s1 = pfn_stage(fdv.features, assignment, net.stages[0]);
  const std::size_t h = net.stages[0].out_channels;
  Matrix concat(s1.per_point.rows, 2 * h);
  parallel_for(concat.rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t pillar = assignment.feature_index.index[i];
      std::copy_n(s1.per_point.data.data() + i * h, h, concat.data.data() + i * 2 * h);
      std::copy_n(s1.per_pillar.data.data() + pillar * h, h,
                  concat.data.data() + i * 2 * h + h);
    }
  });
  return pfn_stage(concat, assignment, net.stages[1]).per_pillar;
}

std::vector<FeatureMap> scatter_to_bev(const Matrix& pillar_features,
                                       const PillarAssignment& assignment,
                                       const GridConfig& grid, std::size_t batch_count) {
  if (pillar_features.rows != assignment.pillar_count()) {
    throw ShapeError("pillar feature rows do not match the pillar count");
  }
  if (batch_count == 0) {
    batch_count = 1;
    for (const auto& c : assignment.coords) {
      batch_count = std::max<std::size_t>(batch_count, c.batch + 1);
    }
  }
  const std::size_t ch = pillar_features.cols;
  const std::size_t layers = grid.size[2];
  std::vector<FeatureMap> maps(batch_count, FeatureMap(ch * layers, grid.size[1], grid.size[0]));
  for (std::size_t p = 0; p < assignment.pillar_count(); ++p) {
    const VoxelCoord& c = assignment.coords[p];
    assert(c.row < grid.size[1] && c.col < grid.size[0] && c.layer < layers);
    if (c.batch >= batch_count || c.row >= grid.size[1] || c.col >= grid.size[0] ||
        c.layer >= layers) {
      throw Error("pillar coordinate outside the grid");
    }
    FeatureMap& m = maps[c.batch];
    for (std::size_t k = 0; k < ch; ++k) {
      m.at(c.layer * ch + k, c.row, c.col) = pillar_features(p, k);
    }
  }
  return maps;
}

Checkpoint backbone_to_checkpoint(const RvBackbone& net) {
  Checkpoint ckpt;
  ckpt.metadata = "kind=rv-backbone";
  for (const auto& s : net.stages) {
    ckpt.tensors.push_back({{static_cast<std::uint32_t>(s.out_channels),
                             static_cast<std::uint32_t>(s.in_channels)},
                            s.weights});
    ckpt.tensors.push_back({{static_cast<std::uint32_t>(s.out_channels)}, s.bias});
  }
  return ckpt;
}

RvBackbone backbone_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.metadata != "kind=rv-backbone" || ckpt.tensors.size() != 4) {
    throw FormatError("checkpoint does not hold an RV backbone");
  }
  RvBackbone net;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& w = ckpt.tensors[2 * i];
    const auto& b = ckpt.tensors[2 * i + 1];
    if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[0]) {
      throw FormatError("malformed backbone layer in checkpoint");
    }
    auto& s = net.stages[i];
    s.out_channels = w.shape[0];
    s.in_channels = w.shape[1];
    s.weights = w.data;
    s.bias = b.data;
    s.check();
  }
  return net;
}

}  // namespace rvc
