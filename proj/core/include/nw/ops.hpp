#pragma once

#include <vector>

#include "nw/graph.hpp"

namespace nw::ops {

// Elementwise / reduction
int add(Graph& g, int a, int b);
int sub(Graph& g, int a, int b);
int mul(Graph& g, int a, int b);
int scale(Graph& g, int a, double s);
int sum(Graph& g, int a);                       // -> scalar
int mean(Graph& g, int a);                      // -> scalar
int sum_squares(Graph& g, int a);               // -> scalar, sum of a_i^2
// Scalar dot with fixed coefficients: sum_i w_i * a_i  (a is a vector).
int weighted_sum(Graph& g, int a, std::vector<double> w);

// Shape
int reshape(Graph& g, int a, std::vector<int64_t> shape);
int concat_cols(Graph& g, int a, int b);        // [N,A],[N,B] -> [N,A+B]

// Dense: x [N,Fin], w [Fout,Fin], b [Fout] -> [N,Fout]
int dense(Graph& g, int x, int w, int b);

// Convolution (cross-correlation, zero padding).
// x [N,Cin,H,W], w [Cout,Cin,kh,kw], b [Cout] -> [N,Cout,Ho,Wo]
int conv2d(Graph& g, int x, int w, int b, int stride, int pad);

// Transposed convolution. x [N,Cin,H,W], w [Cin,Cout,kh,kw], b [Cout]
// -> [N,Cout,(H-1)*stride - 2*pad + kh + out_pad, ...]
int tconv2d(Graph& g, int x, int w, int b, int stride, int pad, int out_pad);

// Batch normalization over N,H,W per channel. Train mode normalizes with
// batch statistics and updates the running tensors in place
// (run <- momentum*run + (1-momentum)*batch); eval mode reads them.
int batch_norm2d(Graph& g, int x, int gamma, int beta, Tensor& running_mean,
                 Tensor& running_var, double momentum, double eps);

// Activations
int relu(Graph& g, int a);
int leaky_relu(Graph& g, int a, double alpha);
int tanh_act(Graph& g, int a);

// Inverted dropout: train mode zeroes each activation independently with
// probability p and rescales survivors by 1/(1-p); eval mode is the
// identity (returns the input node unchanged).
int dropout(Graph& g, int a, double p);

// Row softmax on [N,K].
int softmax(Graph& g, int a);

// Max pooling, kernel k, stride = k. x [N,C,H,W] -> [N,C,H/k,W/k]
int max_pool2d(Graph& g, int a, int k);

// Per-sample focal loss over softmax probabilities.
// probs [N,K], labels size N -> [N] of -(1-p_y)^gamma * ln(max(p_y, eps)).
int focal_nll(Graph& g, int probs, std::vector<int> labels, double gamma,
              double eps = 1e-12);

}  // namespace nw::ops
