#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvc/common.hpp"

namespace rvc::nn {

// Dense row-major tensor of doubles.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t shape_numel(std::span<const std::size_t> shape);
std::string shape_string(std::span<const std::size_t> shape);

// y = x W^T + b with x: batch x in, W: out x in, b: out.
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct LinearGrads {
  Tensor dx, dw, db;
};
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

// Valid (unpadded) cross-correlation. x: batch x C_in x H x W,
// kernels: C_out x C_in x kH x kW, bias: C_out.
Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride = 1);

struct ConvGrads {
  Tensor dx, dk, db;
};
ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dy,
                          std::size_t stride = 1);

Tensor relu(const Tensor& x);
// dy masked where the forward input was <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// Row-wise softmax of batch x K logits, max-subtracted.
Tensor softmax(const Tensor& logits);

struct LossResult {
  double loss = 0;
  Tensor grad;  // d loss / d logits
};

// Mean negative log-likelihood of softmax(logits) at the labels.
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// Bias-corrected Adam update, in place. Moments are created on first use.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state);

// ---------------------------------------------------------------------------
// Fixed-architecture sequential network with hand-wired backward passes.

enum class LayerKind { kLinear, kConv2d, kRelu, kFlatten };

struct Layer {
  LayerKind kind = LayerKind::kRelu;
  Tensor weight;  // linear: out x in; conv: C_out x C_in x kH x kW
  Tensor bias;
  std::size_t stride = 1;

  bool has_params() const { return kind == LayerKind::kLinear || kind == LayerKind::kConv2d; }
};

Layer make_linear(std::size_t in, std::size_t out, Rng& rng);
Layer make_conv2d(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw,
                  std::size_t stride, Rng& rng);
Layer make_relu();
Layer make_flatten();

class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  // Inputs of every layer plus the final output.
  struct Trace {
    std::vector<Tensor> activations;
  };

  Tensor forward(const Tensor& x) const;
  Tensor forward(const Tensor& x, Trace& trace) const;
  // Gradients for every parameter tensor, in parameters() order.
  std::vector<Tensor> backward(const Trace& trace, const Tensor& dout) const;

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  std::vector<Layer> layers_;
};

}  // namespace rvc::nn
