#pragma once

#include <string>
#include <vector>

#include "nw/graph.hpp"
#include "nw/rng.hpp"

namespace nw {

// Declarative layer description. Models are lists of these; the same spec
// drives parameter creation, shape arithmetic and the forward pass, so the
// three can never drift apart.
struct LayerSpec {
  enum class Kind {
    kDense,
    kConv2d,
    kTConv2d,
    kBatchNorm,
    kLeakyRelu,
    kRelu,
    kTanh,
    kDropout,
    kSoftmax,
    kMaxPool,
    kResidual,  // res_convs 3x3 conv pairs with identity skip, relu output
  };

  Kind kind;
  std::string name;  // parameter prefix; required for parameterized kinds

  int in_ch = 0, out_ch = 0;       // conv / tconv / batch-norm / residual
  int kernel = 0, stride = 1, pad = 0, out_pad = 0;
  int in_features = 0, out_features = 0;  // dense
  double p = 0.0;                          // dropout
  double alpha = 0.01;                     // leaky relu slope
  int pool = 2;                            // max-pool kernel (stride = kernel)
  int res_convs = 2;                       // convs inside a residual block
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;

  static LayerSpec dense_layer(std::string name, int in_features, int out_features);
  static LayerSpec conv(std::string name, int in_ch, int out_ch, int kernel,
                        int stride, int pad);
  static LayerSpec tconv(std::string name, int in_ch, int out_ch, int kernel,
                         int stride, int pad, int out_pad);
  static LayerSpec batch_norm(std::string name, int channels);
  static LayerSpec leaky_relu_layer(double alpha = 0.01);
  static LayerSpec relu_layer();
  static LayerSpec tanh_layer();
  static LayerSpec dropout_layer(double p);
  static LayerSpec softmax_layer();
  static LayerSpec max_pool(int k);
  static LayerSpec residual(std::string name, int channels, int convs = 2);

  std::string kind_name() const;
};

// Output shape as a pure function of input shape and spec; throws nw::Error
// naming the layer and both shapes on any mismatch.
std::vector<int64_t> layer_out_shape(const LayerSpec& spec,
                                     const std::vector<int64_t>& in_shape);

// Creates the layer's parameters (He/Glorot init as appropriate) under
// spec.name in the store. No-op for parameterless layers.
void init_layer_params(const LayerSpec& spec, ParamStore& store, Rng& rng);

// Runs one layer. Parameterized layers look their tensors up by spec.name.
int forward_layer(Graph& g, int x, const LayerSpec& spec, ParamStore& store);

// Convenience: a whole stack in order.
int forward_stack(Graph& g, int x, const std::vector<LayerSpec>& stack,
                  ParamStore& store);
void init_stack_params(const std::vector<LayerSpec>& stack, ParamStore& store,
                       Rng& rng);
std::vector<int64_t> stack_out_shape(const std::vector<LayerSpec>& stack,
                                     std::vector<int64_t> shape);

}  // namespace nw
