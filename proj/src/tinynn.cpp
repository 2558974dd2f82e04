#include "rvc/tinynn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace rvc::nn {

std::size_t shape_numel(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_numel(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_numel(shape)) {
    throw ShapeError("tensor data size does not match shape " + shape_string(shape));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 2 && w.rank() == 2 && b.rank() == 1, "linear: expected 2D x, 2D W, 1D b");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  require(w.dim(1) == in && b.dim(0) == out,
          "linear: shapes " + shape_string(x.shape) + " " + shape_string(w.shape) + " " +
              shape_string(b.shape) + " disagree");
  Tensor y({batch, out});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xr = x.data.data() + n * in;
    double* yr = y.data.data() + n * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w.data.data() + o * in;
      double acc = 0.0;
      for (std::size_t k = 0; k < in; ++k) acc += wr[k] * xr[k];
      yr[o] = acc + b.data[o];
    }
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  require(x.rank() == 2 && w.rank() == 2 && dy.rank() == 2, "linear backward: rank mismatch");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  require(w.dim(1) == in && dy.dim(0) == batch && dy.dim(1) == out,
          "linear backward: shape mismatch");
  LinearGrads g{Tensor({batch, in}), Tensor({out, in}), Tensor({out})};
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xr = x.data.data() + n * in;
    const double* gr = dy.data.data() + n * out;
    double* dxr = g.dx.data.data() + n * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double go = gr[o];
      if (go == 0.0) continue;
      const double* wr = w.data.data() + o * in;
      double* dwr = g.dw.data.data() + o * in;
      for (std::size_t k = 0; k < in; ++k) {
        dwr[k] += go * xr[k];
        dxr[k] += go * wr[k];
      }
      g.db.data[o] += go;
    }
  }
  return g;
}

namespace {

struct ConvDims {
  std::size_t batch, c_in, h, w, c_out, kh, kw, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, std::size_t stride) {
  require(x.rank() == 4 && k.rank() == 4, "conv2d: expected 4D input and kernels");
  require(stride >= 1, "conv2d: stride must be positive");
  require(x.dim(1) == k.dim(1), "conv2d: input has " + std::to_string(x.dim(1)) +
                                    " channels, kernels expect " + std::to_string(k.dim(1)));
  require(x.dim(2) >= k.dim(2) && x.dim(3) >= k.dim(3),
          "conv2d: window " + shape_string(k.shape) + " larger than input " +
              shape_string(x.shape));
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), k.dim(0), k.dim(2), k.dim(3), 0, 0};
  d.oh = (d.h - d.kh) / stride + 1;
  d.ow = (d.w - d.kw) / stride + 1;
  return d;
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride) {
  const ConvDims d = conv_dims(x, kernels, stride);
  require(bias.rank() == 1 && bias.dim(0) == d.c_out, "conv2d: bias size mismatch");
  Tensor y({d.batch, d.c_out, d.oh, d.ow});
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t co = 0; co < d.c_out; ++co) {
      for (std::size_t i = 0; i < d.oh; ++i) {
        for (std::size_t j = 0; j < d.ow; ++j) {
          double acc = bias.data[co];
          for (std::size_t ci = 0; ci < d.c_in; ++ci) {
            for (std::size_t a = 0; a < d.kh; ++a) {
              const double* xr =
                  x.data.data() + ((n * d.c_in + ci) * d.h + i * stride + a) * d.w + j * stride;
              const double* kr = kernels.data.data() + ((co * d.c_in + ci) * d.kh + a) * d.kw;
              for (std::size_t b = 0; b < d.kw; ++b) acc += kr[b] * xr[b];
            }
          }
          y.data[((n * d.c_out + co) * d.oh + i) * d.ow + j] = acc;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dy,
                          std::size_t stride) {
  const ConvDims d = conv_dims(x, kernels, stride);
  require(dy.rank() == 4 && dy.dim(0) == d.batch && dy.dim(1) == d.c_out &&
              dy.dim(2) == d.oh && dy.dim(3) == d.ow,
          "conv2d backward: gradient shape mismatch");
  ConvGrads g{Tensor(x.shape), Tensor(kernels.shape), Tensor({d.c_out})};
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t co = 0; co < d.c_out; ++co) {
      for (std::size_t i = 0; i < d.oh; ++i) {
        for (std::size_t j = 0; j < d.ow; ++j) {
          const double go = dy.data[((n * d.c_out + co) * d.oh + i) * d.ow + j];
          g.db.data[co] += go;
          if (go == 0.0) continue;
          for (std::size_t ci = 0; ci < d.c_in; ++ci) {
            for (std::size_t a = 0; a < d.kh; ++a) {
              const std::size_t xo = ((n * d.c_in + ci) * d.h + i * stride + a) * d.w + j * stride;
              const std::size_t ko = ((co * d.c_in + ci) * d.kh + a) * d.kw;
              for (std::size_t b = 0; b < d.kw; ++b) {
                g.dk.data[ko + b] += go * x.data[xo + b];
                g.dx.data[xo + b] += go * kernels.data[ko + b];
              }
            }
          }
        }
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  require(x.shape == dy.shape, "relu backward: shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    if (!(x.data[i] > 0.0)) dx.data[i] = 0.0;
  }
  return dx;
}

Tensor softmax(const Tensor& logits) {
  require(logits.rank() == 2, "softmax: expected batch x K logits");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  Tensor p = logits;
  for (std::size_t n = 0; n < batch; ++n) {
    double* r = p.data.data() + n * k;
    const double mx = *std::max_element(r, r + k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      r[c] = std::exp(r[c] - mx);
      sum += r[c];
    }
    for (std::size_t c = 0; c < k; ++c) r[c] /= sum;
  }
  return p;
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require(logits.rank() == 2 && logits.dim(0) == labels.size(),
          "cross entropy: one label per logit row required");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  require(batch > 0, "cross entropy: empty batch");
  LossResult r;
  r.grad = Tensor({batch, k});
  double total = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw BoundsError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(k) + ")");
    }
    const double* z = logits.data.data() + n * k;
    const double mx = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - mx);
    const double log_norm = mx + std::log(sum);
    total += log_norm - z[label];
    double* g = r.grad.data.data() + n * k;
    for (std::size_t c = 0; c < k; ++c) {
      g[c] = std::exp(z[c] - log_norm) / static_cast<double>(batch);
    }
    g[label] -= 1.0 / static_cast<double>(batch);
  }
  r.loss = total / static_cast<double>(batch);
  return r;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state) {
  require(params.size() == grads.size(), "adam: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape);
      state.v.emplace_back(p->shape);
    }
  }
  require(state.m.size() == params.size(), "adam: state does not match parameters");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    require(p.shape == g.shape && p.shape == state.m[i].shape,
            "adam: gradient shape " + shape_string(g.shape) + " vs parameter " +
                shape_string(p.shape));
    double* m = state.m[i].data.data();
    double* v = state.v[i].data.data();
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g.data[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g.data[j] * g.data[j];
      const double mh = m[j] / corr1;
      const double vh = v[j] / corr2;
      p.data[j] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
}

// ---------------------------------------------------------------------------

Layer make_linear(std::size_t in, std::size_t out, Rng& rng) {
  Layer l;
  l.kind = LayerKind::kLinear;
  l.weight = Tensor({out, in});
  l.bias = Tensor({out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : l.weight.data) v = rng.uniform(-bound, bound);
  for (double& v : l.bias.data) v = rng.uniform(-bound, bound);
  return l;
}

Layer make_conv2d(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw,
                  std::size_t stride, Rng& rng) {
  Layer l;
  l.kind = LayerKind::kConv2d;
  l.stride = stride;
  l.weight = Tensor({c_out, c_in, kh, kw});
  l.bias = Tensor({c_out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * kh * kw));
  for (double& v : l.weight.data) v = rng.uniform(-bound, bound);
  for (double& v : l.bias.data) v = rng.uniform(-bound, bound);
  return l;
}

Layer make_relu() { return Layer{LayerKind::kRelu, {}, {}, 1}; }
Layer make_flatten() { return Layer{LayerKind::kFlatten, {}, {}, 1}; }

Tensor Sequential::forward(const Tensor& x) const {
  Trace t;
  return forward(x, t);
}

Tensor Sequential::forward(const Tensor& x, Trace& trace) const {
  trace.activations.clear();
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(x);
  for (const Layer& l : layers_) {
    const Tensor& in = trace.activations.back();
    Tensor out;
    switch (l.kind) {
      case LayerKind::kLinear:
        out = linear_forward(in, l.weight, l.bias);
        break;
      case LayerKind::kConv2d:
        out = conv2d_forward(in, l.weight, l.bias, l.stride);
        break;
      case LayerKind::kRelu:
        out = relu(in);
        break;
      case LayerKind::kFlatten:
        require(in.rank() >= 1, "flatten: empty shape");
        out = Tensor({in.dim(0), in.numel() / std::max<std::size_t>(in.dim(0), 1)}, in.data);
        break;
    }
    trace.activations.push_back(std::move(out));
  }
  return trace.activations.back();
}

std::vector<Tensor> Sequential::backward(const Trace& trace, const Tensor& dout) const {
  require(trace.activations.size() == layers_.size() + 1, "backward: trace does not match network");
  std::vector<Tensor> grads;  // reverse order, fixed up at the end
  Tensor g = dout;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const Tensor& in = trace.activations[li];
    switch (l.kind) {
      case LayerKind::kLinear: {
        LinearGrads lg = linear_backward(in, l.weight, g);
        grads.push_back(std::move(lg.db));
        grads.push_back(std::move(lg.dw));
        g = std::move(lg.dx);
        break;
      }
      case LayerKind::kConv2d: {
        ConvGrads cg = conv2d_backward(in, l.weight, g, l.stride);
        grads.push_back(std::move(cg.db));
        grads.push_back(std::move(cg.dk));
        g = std::move(cg.dx);
        break;
      }
      case LayerKind::kRelu:
        g = relu_backward(in, g);
        break;
      case LayerKind::kFlatten:
        g = Tensor(in.shape, std::move(g.data));
        break;
    }
  }
  std::reverse(grads.begin(), grads.end());
  return grads;
}

std::vector<Tensor*> Sequential::parameters() {
  std::vector<Tensor*> out;
  for (Layer& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Sequential::parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers_) {
    if (!l.has_params()) continue;
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->numel();
  return n;
}

}  // namespace rvc::nn
