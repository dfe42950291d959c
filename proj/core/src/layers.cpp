#include "nw/layers.hpp"

#include <cmath>

#include "nw/common.hpp"
#include "nw/ops.hpp"

namespace nw {

LayerSpec LayerSpec::dense_layer(std::string name, int in_features, int out_features) {
  LayerSpec s;
  s.kind = Kind::kDense;
  s.name = std::move(name);
  s.in_features = in_features;
  s.out_features = out_features;
  return s;
}

LayerSpec LayerSpec::conv(std::string name, int in_ch, int out_ch, int kernel,
                          int stride, int pad) {
  LayerSpec s;
  s.kind = Kind::kConv2d;
  s.name = std::move(name);
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec LayerSpec::tconv(std::string name, int in_ch, int out_ch, int kernel,
                           int stride, int pad, int out_pad) {
  LayerSpec s;
  s.kind = Kind::kTConv2d;
  s.name = std::move(name);
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  s.out_pad = out_pad;
  return s;
}

LayerSpec LayerSpec::batch_norm(std::string name, int channels) {
  LayerSpec s;
  s.kind = Kind::kBatchNorm;
  s.name = std::move(name);
  s.in_ch = s.out_ch = channels;
  return s;
}

LayerSpec LayerSpec::leaky_relu_layer(double alpha) {
  LayerSpec s;
  s.kind = Kind::kLeakyRelu;
  s.alpha = alpha;
  return s;
}

LayerSpec LayerSpec::relu_layer() {
  LayerSpec s;
  s.kind = Kind::kRelu;
  return s;
}

LayerSpec LayerSpec::tanh_layer() {
  LayerSpec s;
  s.kind = Kind::kTanh;
  return s;
}

LayerSpec LayerSpec::dropout_layer(double p) {
  LayerSpec s;
  s.kind = Kind::kDropout;
  s.p = p;
  return s;
}

LayerSpec LayerSpec::softmax_layer() {
  LayerSpec s;
  s.kind = Kind::kSoftmax;
  return s;
}

LayerSpec LayerSpec::max_pool(int k) {
  LayerSpec s;
  s.kind = Kind::kMaxPool;
  s.pool = k;
  return s;
}

LayerSpec LayerSpec::residual(std::string name, int channels, int convs) {
  LayerSpec s;
  s.kind = Kind::kResidual;
  s.name = std::move(name);
  s.in_ch = s.out_ch = channels;
  s.res_convs = convs;
  return s;
}

std::string LayerSpec::kind_name() const {
  switch (kind) {
    case Kind::kDense: return "dense";
    case Kind::kConv2d: return "conv2d";
    case Kind::kTConv2d: return "transpose-conv2d";
    case Kind::kBatchNorm: return "batch-norm";
    case Kind::kLeakyRelu: return "leaky-relu";
    case Kind::kRelu: return "relu";
    case Kind::kTanh: return "tanh";
    case Kind::kDropout: return "dropout";
    case Kind::kSoftmax: return "softmax";
    case Kind::kMaxPool: return "max-pool";
    case Kind::kResidual: return "residual-block";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_error(const LayerSpec& spec,
                              const std::vector<int64_t>& in,
                              const std::string& why) {
  throw Error(cat("layer '", spec.name.empty() ? spec.kind_name() : spec.name,
                  "' (", spec.kind_name(), "): ", why, "; input shape ",
                  Tensor::shape_str(in)));
}

}  // namespace

std::vector<int64_t> layer_out_shape(const LayerSpec& spec,
                                     const std::vector<int64_t>& in) {
  using K = LayerSpec::Kind;
  switch (spec.kind) {
    case K::kDense: {
      if (in.size() != 2 || in[1] != spec.in_features)
        shape_error(spec, in, cat("expects [N,", spec.in_features, "]"));
      return {in[0], spec.out_features};
    }
    case K::kConv2d: {
      if (in.size() != 4 || in[1] != spec.in_ch)
        shape_error(spec, in, cat("expects [N,", spec.in_ch, ",H,W]"));
      const int64_t ho = (in[2] + 2 * spec.pad - spec.kernel) / spec.stride + 1;
      const int64_t wo = (in[3] + 2 * spec.pad - spec.kernel) / spec.stride + 1;
      if (ho <= 0 || wo <= 0) shape_error(spec, in, "kernel larger than padded input");
      return {in[0], spec.out_ch, ho, wo};
    }
    case K::kTConv2d: {
      if (in.size() != 4 || in[1] != spec.in_ch)
        shape_error(spec, in, cat("expects [N,", spec.in_ch, ",H,W]"));
      const int64_t ho =
          (in[2] - 1) * spec.stride - 2 * spec.pad + spec.kernel + spec.out_pad;
      const int64_t wo =
          (in[3] - 1) * spec.stride - 2 * spec.pad + spec.kernel + spec.out_pad;
      if (ho <= 0 || wo <= 0) shape_error(spec, in, "degenerate output");
      return {in[0], spec.out_ch, ho, wo};
    }
    case K::kBatchNorm:
    case K::kResidual: {
      if (in.size() != 4 || in[1] != spec.in_ch)
        shape_error(spec, in, cat("expects [N,", spec.in_ch, ",H,W]"));
      return in;
    }
    case K::kMaxPool: {
      if (in.size() != 4 || in[2] % spec.pool != 0 || in[3] % spec.pool != 0)
        shape_error(spec, in, cat("expects NCHW divisible by ", spec.pool));
      return {in[0], in[1], in[2] / spec.pool, in[3] / spec.pool};
    }
    case K::kSoftmax: {
      if (in.size() != 2) shape_error(spec, in, "expects [N,K]");
      return in;
    }
    case K::kLeakyRelu:
    case K::kRelu:
    case K::kTanh:
    case K::kDropout:
      return in;
  }
  shape_error(spec, in, "unknown layer kind");
}

void init_layer_params(const LayerSpec& spec, ParamStore& store, Rng& rng) {
  using K = LayerSpec::Kind;
  switch (spec.kind) {
    case K::kDense: {
      const double std = std::sqrt(2.0 / spec.in_features);
      store.create(spec.name + ".w",
                   Tensor::randn({spec.out_features, spec.in_features}, rng, std));
      store.create(spec.name + ".b", Tensor::zeros({spec.out_features}));
      return;
    }
    case K::kConv2d: {
      const double std = std::sqrt(2.0 / (spec.in_ch * spec.kernel * spec.kernel));
      store.create(spec.name + ".w",
                   Tensor::randn({spec.out_ch, spec.in_ch, spec.kernel, spec.kernel},
                                 rng, std));
      store.create(spec.name + ".b", Tensor::zeros({spec.out_ch}));
      return;
    }
    case K::kTConv2d: {
      const double std = std::sqrt(2.0 / (spec.in_ch * spec.kernel * spec.kernel));
      store.create(spec.name + ".w",
                   Tensor::randn({spec.in_ch, spec.out_ch, spec.kernel, spec.kernel},
                                 rng, std));
      store.create(spec.name + ".b", Tensor::zeros({spec.out_ch}));
      return;
    }
    case K::kBatchNorm: {
      store.create(spec.name + ".gamma", Tensor::full({spec.in_ch}, 1.0));
      store.create(spec.name + ".beta", Tensor::zeros({spec.in_ch}));
      store.create(spec.name + ".running_mean", Tensor::zeros({spec.in_ch}),
                   /*trainable=*/false);
      store.create(spec.name + ".running_var", Tensor::full({spec.in_ch}, 1.0),
                   /*trainable=*/false);
      return;
    }
    case K::kResidual: {
      for (int i = 0; i < spec.res_convs; ++i) {
        auto conv = LayerSpec::conv(cat(spec.name, ".conv", i + 1), spec.in_ch,
                                    spec.in_ch, 3, 1, 1);
        init_layer_params(conv, store, rng);
      }
      return;
    }
    default:
      return;  // parameterless
  }
}

int forward_layer(Graph& g, int x, const LayerSpec& spec, ParamStore& store) {
  // validates shapes up front so errors name the layer
  layer_out_shape(spec, g.val(x).shape());
  using K = LayerSpec::Kind;
  switch (spec.kind) {
    case K::kDense: {
      int w = g.param(store, spec.name + ".w");
      int b = g.param(store, spec.name + ".b");
      return ops::dense(g, x, w, b);
    }
    case K::kConv2d: {
      int w = g.param(store, spec.name + ".w");
      int b = g.param(store, spec.name + ".b");
      return ops::conv2d(g, x, w, b, spec.stride, spec.pad);
    }
    case K::kTConv2d: {
      int w = g.param(store, spec.name + ".w");
      int b = g.param(store, spec.name + ".b");
      return ops::tconv2d(g, x, w, b, spec.stride, spec.pad, spec.out_pad);
    }
    case K::kBatchNorm: {
      int gm = g.param(store, spec.name + ".gamma");
      int bt = g.param(store, spec.name + ".beta");
      Tensor& rm = store.at(spec.name + ".running_mean").value;
      Tensor& rv = store.at(spec.name + ".running_var").value;
      return ops::batch_norm2d(g, x, gm, bt, rm, rv, spec.bn_momentum, spec.bn_eps);
    }
    case K::kLeakyRelu:
      return ops::leaky_relu(g, x, spec.alpha);
    case K::kRelu:
      return ops::relu(g, x);
    case K::kTanh:
      return ops::tanh_act(g, x);
    case K::kDropout:
      return ops::dropout(g, x, spec.p);
    case K::kSoftmax:
      return ops::softmax(g, x);
    case K::kMaxPool:
      return ops::max_pool2d(g, x, spec.pool);
    case K::kResidual: {
      int h = x;
      for (int i = 0; i < spec.res_convs; ++i) {
        int w = g.param(store, cat(spec.name, ".conv", i + 1, ".w"));
        int b = g.param(store, cat(spec.name, ".conv", i + 1, ".b"));
        h = ops::conv2d(g, h, w, b, 1, 1);
        if (i + 1 < spec.res_convs) h = ops::relu(g, h);
      }
      return ops::relu(g, ops::add(g, x, h));
    }
  }
  throw Error("forward_layer: unknown layer kind");
}

int forward_stack(Graph& g, int x, const std::vector<LayerSpec>& stack,
                  ParamStore& store) {
  for (const auto& spec : stack) x = forward_layer(g, x, spec, store);
  return x;
}

void init_stack_params(const std::vector<LayerSpec>& stack, ParamStore& store,
                       Rng& rng) {
  for (const auto& spec : stack) init_layer_params(spec, store, rng);
}

std::vector<int64_t> stack_out_shape(const std::vector<LayerSpec>& stack,
                                     std::vector<int64_t> shape) {
  for (const auto& spec : stack) shape = layer_out_shape(spec, shape);
  return shape;
}

}  // namespace nw
