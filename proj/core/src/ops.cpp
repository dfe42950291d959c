#include "nw/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "nw/common.hpp"
#include "nw/kernels.hpp"
#include "nw/rng.hpp"

namespace nw::ops {

namespace {

// Reusable scratch buffers for the GEMM-based kernels. Single-threaded
// training is the contract, so a small fixed pool per thread suffices.
std::vector<double>& scratch(int slot, size_t n) {
  thread_local std::vector<double> bufs[4];
  auto& b = bufs[slot];
  if (b.size() < n) b.resize(n);
  return b;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.same_shape(b), cat(op, ": shape mismatch ", a.shape_str(), " vs ",
                             b.shape_str()));
}

}  // namespace

int add(Graph& g, int a, int b) {
  const Tensor& ta = g.val(a);
  const Tensor& tb = g.val(b);
  check_same_shape(ta, tb, "add");
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = ta[i] + tb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    for (int in : {a, b}) {
      if (!gr.needs_grad(in)) continue;
      Tensor& gi = gr.grad_of(in);
      for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go[i];
    }
  });
}

int sub(Graph& g, int a, int b) {
  const Tensor& ta = g.val(a);
  const Tensor& tb = g.val(b);
  check_same_shape(ta, tb, "sub");
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = ta[i] - tb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    if (gr.needs_grad(a)) {
      Tensor& gi = gr.grad_of(a);
      for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go[i];
    }
    if (gr.needs_grad(b)) {
      Tensor& gi = gr.grad_of(b);
      for (int64_t i = 0; i < gi.numel(); ++i) gi[i] -= go[i];
    }
  });
}

int mul(Graph& g, int a, int b) {
  const Tensor& ta = g.val(a);
  const Tensor& tb = g.val(b);
  check_same_shape(ta, tb, "mul");
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = ta[i] * tb[i];
  return g.emit(std::move(out), {a, b}, [a, b](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const Tensor& va = gr.val(a);
    const Tensor& vb = gr.val(b);
    if (gr.needs_grad(a)) {
      Tensor& gi = gr.grad_of(a);
      for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go[i] * vb[i];
    }
    if (gr.needs_grad(b)) {
      Tensor& gi = gr.grad_of(b);
      for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go[i] * va[i];
    }
  });
}

int scale(Graph& g, int a, double s) {
  const Tensor& ta = g.val(a);
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = s * ta[i];
  return g.emit(std::move(out), {a}, [a, s](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += s * go[i];
  });
}

int sum(Graph& g, int a) {
  const Tensor& ta = g.val(a);
  double s = 0.0;
  for (int64_t i = 0; i < ta.numel(); ++i) s += ta[i];
  return g.emit(Tensor::scalar(s), {a}, [a](Graph& gr, int id) {
    const double go = gr.grad_of(id)[0];
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go;
  });
}

int mean(Graph& g, int a) {
  const Tensor& ta = g.val(a);
  const double inv = 1.0 / static_cast<double>(ta.numel());
  double s = 0.0;
  for (int64_t i = 0; i < ta.numel(); ++i) s += ta[i];
  return g.emit(Tensor::scalar(s * inv), {a}, [a, inv](Graph& gr, int id) {
    const double go = gr.grad_of(id)[0] * inv;
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go;
  });
}

int sum_squares(Graph& g, int a) {
  const Tensor& ta = g.val(a);
  double s = 0.0;
  for (int64_t i = 0; i < ta.numel(); ++i) s += ta[i] * ta[i];
  return g.emit(Tensor::scalar(s), {a}, [a](Graph& gr, int id) {
    const double go = gr.grad_of(id)[0];
    const Tensor& va = gr.val(a);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += 2.0 * va[i] * go;
  });
}

int weighted_sum(Graph& g, int a, std::vector<double> w) {
  const Tensor& ta = g.val(a);
  check(static_cast<int64_t>(w.size()) == ta.numel(),
        cat("weighted_sum: ", w.size(), " weights for ", ta.numel(), " values"));
  double s = 0.0;
  for (int64_t i = 0; i < ta.numel(); ++i) s += w[static_cast<size_t>(i)] * ta[i];
  return g.emit(Tensor::scalar(s), {a},
                [a, w = std::move(w)](Graph& gr, int id) {
                  const double go = gr.grad_of(id)[0];
                  Tensor& gi = gr.grad_of(a);
                  for (int64_t i = 0; i < gi.numel(); ++i)
                    gi[i] += w[static_cast<size_t>(i)] * go;
                });
}

int reshape(Graph& g, int a, std::vector<int64_t> shape) {
  Tensor out = g.val(a).reshaped(std::move(shape));
  return g.emit(std::move(out), {a}, [a](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i) gi[i] += go[i];
  });
}

int concat_cols(Graph& g, int a, int b) {
  const Tensor& ta = g.val(a);
  const Tensor& tb = g.val(b);
  check(ta.rank() == 2 && tb.rank() == 2 && ta.dim(0) == tb.dim(0),
        cat("concat_cols: incompatible shapes ", ta.shape_str(), " and ",
            tb.shape_str()));
  const int64_t n = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
  Tensor out = Tensor::uninit({n, ca + cb});
  for (int64_t r = 0; r < n; ++r) {
    for (int64_t j = 0; j < ca; ++j) out[r * (ca + cb) + j] = ta[r * ca + j];
    for (int64_t j = 0; j < cb; ++j) out[r * (ca + cb) + ca + j] = tb[r * cb + j];
  }
  return g.emit(std::move(out), {a, b}, [a, b, n, ca, cb](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    if (gr.needs_grad(a)) {
      Tensor& gi = gr.grad_of(a);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < ca; ++j) gi[r * ca + j] += go[r * (ca + cb) + j];
    }
    if (gr.needs_grad(b)) {
      Tensor& gi = gr.grad_of(b);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t j = 0; j < cb; ++j)
          gi[r * cb + j] += go[r * (ca + cb) + ca + j];
    }
  });
}

int dense(Graph& g, int x, int w, int b) {
  const Tensor& tx = g.val(x);
  const Tensor& tw = g.val(w);
  const Tensor& tb = g.val(b);
  check(tx.rank() == 2 && tw.rank() == 2 && tb.rank() == 1,
        cat("dense: bad ranks x", tx.shape_str(), " w", tw.shape_str(), " b",
            tb.shape_str()));
  const int64_t n = tx.dim(0), fin = tx.dim(1), fout = tw.dim(0);
  check(tw.dim(1) == fin && tb.dim(0) == fout,
        cat("dense: shape mismatch x", tx.shape_str(), " w", tw.shape_str()));
  Tensor out = Tensor::uninit({n, fout});
  for (int64_t r = 0; r < n; ++r)
    for (int64_t o = 0; o < fout; ++o) out[r * fout + o] = tb[o];
  kernels::gemm_abt_acc(tx.data(), tw.data(), out.data(), n, fin, fout);
  return g.emit(std::move(out), {x, w, b}, [x, w, b, n, fin, fout](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    if (gr.needs_grad(x))
      kernels::gemm_acc(go.data(), gr.val(w).data(), gr.grad_of(x).data(), n, fout, fin);
    if (gr.needs_grad(w))
      kernels::gemm_atb_acc(go.data(), gr.val(x).data(), gr.grad_of(w).data(), fout, n, fin);
    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad_of(b);
      for (int64_t r = 0; r < n; ++r)
        for (int64_t o = 0; o < fout; ++o) gb[o] += go[r * fout + o];
    }
  });
}

namespace {

struct ConvDims {
  int64_t n, ci, h, w, co, kh, kw, ho, wo;
  int stride, pad;
};

// out[n,co,oy,ox] <- mat[co, (n*ho+oy)*wo+ox]
void spread_mat_to_nchw(const double* mat, const ConvDims& d, const double* bias,
                        double* out) {
  const int64_t cols = d.n * d.ho * d.wo;
  for (int64_t ni = 0; ni < d.n; ++ni)
    for (int64_t co = 0; co < d.co; ++co) {
      const double* src = mat + co * cols + ni * d.ho * d.wo;
      double* dst = out + (ni * d.co + co) * d.ho * d.wo;
      const double bv = bias ? bias[co] : 0.0;
      for (int64_t i = 0; i < d.ho * d.wo; ++i) dst[i] = src[i] + bv;
    }
}

// mat[co, (n*ho+oy)*wo+ox] <- grad[n,co,oy,ox]
void gather_nchw_to_mat(const double* grad, const ConvDims& d, double* mat) {
  const int64_t cols = d.n * d.ho * d.wo;
  for (int64_t ni = 0; ni < d.n; ++ni)
    for (int64_t co = 0; co < d.co; ++co) {
      const double* src = grad + (ni * d.co + co) * d.ho * d.wo;
      double* dst = mat + co * cols + ni * d.ho * d.wo;
      for (int64_t i = 0; i < d.ho * d.wo; ++i) dst[i] = src[i];
    }
}

}  // namespace

int conv2d(Graph& g, int x, int w, int b, int stride, int pad) {
  const Tensor& tx = g.val(x);
  const Tensor& tw = g.val(w);
  const Tensor& tb = g.val(b);
  check(tx.rank() == 4 && tw.rank() == 4,
        cat("conv2d: bad ranks x", tx.shape_str(), " w", tw.shape_str()));
  ConvDims d{tx.dim(0), tx.dim(1), tx.dim(2), tx.dim(3),
             tw.dim(0), tw.dim(2), tw.dim(3), 0, 0, stride, pad};
  check(tw.dim(1) == d.ci, cat("conv2d: input channels ", d.ci,
                               " do not match weight ", tw.shape_str()));
  check(tb.rank() == 1 && tb.dim(0) == d.co,
        cat("conv2d: bias shape ", tb.shape_str(), " for ", d.co, " channels"));
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  check(d.ho > 0 && d.wo > 0, cat("conv2d: kernel ", d.kh, "x", d.kw,
                                  " too large for input ", tx.shape_str()));
  const int64_t krows = d.ci * d.kh * d.kw;
  const int64_t cols = d.n * d.ho * d.wo;

  auto& col = scratch(0, static_cast<size_t>(krows * cols));
  kernels::im2col(tx.data(), d.n, d.ci, d.h, d.w, d.kh, d.kw, stride, pad, col.data());
  auto& outm = scratch(1, static_cast<size_t>(d.co * cols));
  kernels::gemm_set(tw.data(), col.data(), outm.data(), d.co, krows, cols);

  Tensor out = Tensor::uninit({d.n, d.co, d.ho, d.wo});
  spread_mat_to_nchw(outm.data(), d, tb.data(), out.data());

  return g.emit(std::move(out), {x, w, b}, [x, w, b, d](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const int64_t krows = d.ci * d.kh * d.kw;
    const int64_t cols = d.n * d.ho * d.wo;
    auto& gom = scratch(1, static_cast<size_t>(d.co * cols));
    gather_nchw_to_mat(go.data(), d, gom.data());

    if (gr.needs_grad(w)) {
      // im2col is recomputed instead of kept alive on the tape
      auto& col = scratch(0, static_cast<size_t>(krows * cols));
      kernels::im2col(gr.val(x).data(), d.n, d.ci, d.h, d.w, d.kh, d.kw,
                      d.stride, d.pad, col.data());
      kernels::gemm_abt_acc(gom.data(), col.data(), gr.grad_of(w).data(),
                            d.co, cols, krows);
    }
    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad_of(b);
      for (int64_t co = 0; co < d.co; ++co) {
        double s = 0.0;
        const double* row = gom.data() + co * cols;
        for (int64_t i = 0; i < cols; ++i) s += row[i];
        gb[co] += s;
      }
    }
    if (gr.needs_grad(x)) {
      auto& dcol = scratch(2, static_cast<size_t>(krows * cols));
      kernels::gemm_atb_set(gr.val(w).data(), gom.data(), dcol.data(), krows,
                            d.co, cols);
      kernels::col2im_acc(dcol.data(), d.n, d.ci, d.h, d.w, d.kh, d.kw,
                          d.stride, d.pad, gr.grad_of(x).data());
    }
  });
}

int tconv2d(Graph& g, int x, int w, int b, int stride, int pad, int out_pad) {
  const Tensor& tx = g.val(x);
  const Tensor& tw = g.val(w);
  const Tensor& tb = g.val(b);
  check(tx.rank() == 4 && tw.rank() == 4,
        cat("tconv2d: bad ranks x", tx.shape_str(), " w", tw.shape_str()));
  check(out_pad >= 0 && out_pad < stride,
        cat("tconv2d: output padding ", out_pad, " must be < stride ", stride));
  const int64_t n = tx.dim(0), ci = tx.dim(1), h = tx.dim(2), wd = tx.dim(3);
  check(tw.dim(0) == ci, cat("tconv2d: input channels ", ci,
                             " do not match weight ", tw.shape_str()));
  const int64_t co = tw.dim(1), kh = tw.dim(2), kw = tw.dim(3);
  check(tb.rank() == 1 && tb.dim(0) == co,
        cat("tconv2d: bias shape ", tb.shape_str(), " for ", co, " channels"));
  const int64_t ho = (h - 1) * stride - 2 * pad + kh + out_pad;
  const int64_t wo = (wd - 1) * stride - 2 * pad + kw + out_pad;
  check(ho > 0 && wo > 0, cat("tconv2d: degenerate output for input ", tx.shape_str()));

  const int64_t krows = co * kh * kw;
  const int64_t cells = n * h * wd;

  // cols = W^T(ci x co*kh*kw) * x(ci x n*h*w), scattered with col2im onto
  // the output canvas; this is exactly the data-gradient of the matching
  // forward convolution.
  auto& xg = scratch(0, static_cast<size_t>(ci * cells));
  kernels::nchw_to_c_nhw(tx.data(), n, ci, h * wd, xg.data());
  auto& cols = scratch(1, static_cast<size_t>(krows * cells));
  kernels::gemm_atb_set(tw.data(), xg.data(), cols.data(), krows, ci, cells);

  Tensor out = Tensor::uninit({n, co, ho, wo});
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t c = 0; c < co; ++c) {
      double* dst = out.data() + (ni * co + c) * ho * wo;
      for (int64_t i = 0; i < ho * wo; ++i) dst[i] = tb[c];
    }
  kernels::col2im_acc(cols.data(), n, co, ho, wo, kh, kw, stride, pad, out.data());

  return g.emit(std::move(out), {x, w, b},
                [x, w, b, n, ci, co, h, wd, ho, wo, kh, kw, stride, pad](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const int64_t krows = co * kh * kw;
    const int64_t cells = n * h * wd;
    auto& dcols = scratch(1, static_cast<size_t>(krows * cells));
    kernels::im2col(go.data(), n, co, ho, wo, kh, kw, stride, pad, dcols.data());

    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad_of(b);
      for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t c = 0; c < co; ++c) {
          const double* row = go.data() + (ni * co + c) * ho * wo;
          double s = 0.0;
          for (int64_t i = 0; i < ho * wo; ++i) s += row[i];
          gb[c] += s;
        }
    }
    if (gr.needs_grad(w)) {
      auto& xg = scratch(0, static_cast<size_t>(ci * cells));
      kernels::nchw_to_c_nhw(gr.val(x).data(), n, ci, h * wd, xg.data());
      kernels::gemm_abt_acc(xg.data(), dcols.data(), gr.grad_of(w).data(), ci,
                            cells, krows);
    }
    if (gr.needs_grad(x)) {
      auto& dxg = scratch(2, static_cast<size_t>(ci * cells));
      kernels::gemm_set(gr.val(w).data(), dcols.data(), dxg.data(), ci, krows, cells);
      kernels::c_nhw_to_nchw_acc(dxg.data(), n, ci, h * wd, gr.grad_of(x).data());
    }
  });
}

int batch_norm2d(Graph& g, int x, int gamma, int beta, Tensor& running_mean,
                 Tensor& running_var, double momentum, double eps) {
  const Tensor& tx = g.val(x);
  check(tx.rank() == 4, cat("batch_norm2d: expected NCHW input, got ", tx.shape_str()));
  const int64_t n = tx.dim(0), c = tx.dim(1), hw = tx.dim(2) * tx.dim(3);
  const Tensor& tg = g.val(gamma);
  const Tensor& tb = g.val(beta);
  check(tg.numel() == c && tb.numel() == c && running_mean.numel() == c &&
            running_var.numel() == c,
        cat("batch_norm2d: channel mismatch for input ", tx.shape_str()));

  Tensor out = Tensor::uninit(tx.shape());
  const int64_t m = n * hw;

  if (g.training()) {
    std::vector<double> mu(static_cast<size_t>(c), 0.0);
    std::vector<double> var(static_cast<size_t>(c), 0.0);
    for (int64_t ci = 0; ci < c; ++ci) {
      double s = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* p = tx.data() + (ni * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mean_c = s / static_cast<double>(m);
      double v = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const double* p = tx.data() + (ni * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          const double dlt = p[i] - mean_c;
          v += dlt * dlt;
        }
      }
      mu[static_cast<size_t>(ci)] = mean_c;
      var[static_cast<size_t>(ci)] = v / static_cast<double>(m);
      running_mean[ci] = momentum * running_mean[ci] + (1.0 - momentum) * mean_c;
      running_var[ci] =
          momentum * running_var[ci] + (1.0 - momentum) * var[static_cast<size_t>(ci)];
    }
    for (int64_t ni = 0; ni < n; ++ni)
      for (int64_t ci = 0; ci < c; ++ci) {
        const double inv = 1.0 / std::sqrt(var[static_cast<size_t>(ci)] + eps);
        const double gm = tg[ci], bt = tb[ci], mn = mu[static_cast<size_t>(ci)];
        const double* p = tx.data() + (ni * c + ci) * hw;
        double* o = out.data() + (ni * c + ci) * hw;
        for (int64_t i = 0; i < hw; ++i) o[i] = gm * (p[i] - mn) * inv + bt;
      }

    return g.emit(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, n, c, hw, eps, mu = std::move(mu),
                   var = std::move(var)](Graph& gr, int id) {
      const Tensor& go = gr.grad_of(id);
      const Tensor& tx2 = gr.val(x);
      const Tensor& tg2 = gr.val(gamma);
      const int64_t m2 = n * hw;
      for (int64_t ci = 0; ci < c; ++ci) {
        const double mn = mu[static_cast<size_t>(ci)];
        const double vr = var[static_cast<size_t>(ci)];
        const double inv = 1.0 / std::sqrt(vr + eps);
        double sum_dy = 0.0, sum_dy_xhat = 0.0, sum_xc = 0.0;
        for (int64_t ni = 0; ni < n; ++ni) {
          const double* px = tx2.data() + (ni * c + ci) * hw;
          const double* pg = go.data() + (ni * c + ci) * hw;
          for (int64_t i = 0; i < hw; ++i) {
            const double xc = px[i] - mn;
            sum_dy += pg[i];
            sum_dy_xhat += pg[i] * xc * inv;
            sum_xc += xc;
          }
        }
        if (gr.needs_grad(gamma)) gr.grad_of(gamma)[ci] += sum_dy_xhat;
        if (gr.needs_grad(beta)) gr.grad_of(beta)[ci] += sum_dy;
        if (!gr.needs_grad(x)) continue;
        const double gm = tg2[ci];
        // d var and d mu of the batch statistics
        const double dvar = gm * sum_dy_xhat * (-0.5) * inv * inv;
        const double dmu = -gm * sum_dy * inv - 2.0 * dvar * sum_xc /
                           static_cast<double>(m2);
        Tensor& gx = gr.grad_of(x);
        for (int64_t ni = 0; ni < n; ++ni) {
          const double* px = tx2.data() + (ni * c + ci) * hw;
          const double* pg = go.data() + (ni * c + ci) * hw;
          double* pd = gx.data() + (ni * c + ci) * hw;
          for (int64_t i = 0; i < hw; ++i) {
            const double xc = px[i] - mn;
            pd[i] += gm * pg[i] * inv +
                     dvar * 2.0 * xc / static_cast<double>(m2) +
                     dmu / static_cast<double>(m2);
          }
        }
      }
    });
  }

  // eval: normalize with running statistics, no updates
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double inv = 1.0 / std::sqrt(running_var[ci] + eps);
      const double gm = tg[ci], bt = tb[ci], mn = running_mean[ci];
      const double* p = tx.data() + (ni * c + ci) * hw;
      double* o = out.data() + (ni * c + ci) * hw;
      for (int64_t i = 0; i < hw; ++i) o[i] = gm * (p[i] - mn) * inv + bt;
    }
  return g.emit(std::move(out), {x, gamma, beta}, nullptr);
}

namespace {

template <class Fwd, class Dfn>
int unary_pointwise(Graph& g, int a, Fwd fwd, Dfn dfdx_from_in_out) {
  const Tensor& ta = g.val(a);
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = fwd(ta[i]);
  return g.emit(std::move(out), {a}, [a, dfdx_from_in_out](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const Tensor& vi = gr.val(a);
    const Tensor& vo = gr.val(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i)
      gi[i] += go[i] * dfdx_from_in_out(vi[i], vo[i]);
  });
}

}  // namespace

int relu(Graph& g, int a) {
  return unary_pointwise(
      g, a, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

int leaky_relu(Graph& g, int a, double alpha) {
  return unary_pointwise(
      g, a, [alpha](double v) { return v > 0.0 ? v : alpha * v; },
      [alpha](double in, double) { return in > 0.0 ? 1.0 : alpha; });
}

int tanh_act(Graph& g, int a) {
  return unary_pointwise(
      g, a, [](double v) { return std::tanh(v); },
      [](double, double out) { return 1.0 - out * out; });
}

int dropout(Graph& g, int a, double p) {
  check(p >= 0.0 && p < 1.0, cat("dropout: probability ", p, " outside [0,1)"));
  if (!g.training() || p == 0.0) return a;  // eval mode is the identity
  Rng* rng = g.dropout_rng();
  check(rng != nullptr, "dropout in train mode requires the graph's dropout rng");
  const Tensor& ta = g.val(a);
  const double keep_scale = 1.0 / (1.0 - p);
  auto factors = std::make_shared<std::vector<double>>(
      static_cast<size_t>(ta.numel()));
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t i = 0; i < ta.numel(); ++i) {
    const double f = (rng->uniform() >= p) ? keep_scale : 0.0;
    (*factors)[static_cast<size_t>(i)] = f;
    out[i] = ta[i] * f;
  }
  return g.emit(std::move(out), {a}, [a, factors](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < gi.numel(); ++i)
      gi[i] += go[i] * (*factors)[static_cast<size_t>(i)];
  });
}

int softmax(Graph& g, int a) {
  const Tensor& ta = g.val(a);
  check(ta.rank() == 2, cat("softmax: expected [N,K], got ", ta.shape_str()));
  const int64_t n = ta.dim(0), k = ta.dim(1);
  Tensor out = Tensor::uninit(ta.shape());
  for (int64_t r = 0; r < n; ++r) {
    const double* row = ta.data() + r * k;
    double* orow = out.data() + r * k;
    double mx = row[0];
    for (int64_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      orow[j] = std::exp(row[j] - mx);
      s += orow[j];
    }
    const double inv = 1.0 / s;
    for (int64_t j = 0; j < k; ++j) orow[j] *= inv;
  }
  return g.emit(std::move(out), {a}, [a, n, k](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const Tensor& y = gr.val(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t r = 0; r < n; ++r) {
      const double* gr_ = go.data() + r * k;
      const double* yr = y.data() + r * k;
      double dot = 0.0;
      for (int64_t j = 0; j < k; ++j) dot += gr_[j] * yr[j];
      double* gir = gi.data() + r * k;
      for (int64_t j = 0; j < k; ++j) gir[j] += yr[j] * (gr_[j] - dot);
    }
  });
}

int max_pool2d(Graph& g, int a, int k) {
  const Tensor& ta = g.val(a);
  check(ta.rank() == 4, cat("max_pool2d: expected NCHW input, got ", ta.shape_str()));
  const int64_t n = ta.dim(0), c = ta.dim(1), h = ta.dim(2), w = ta.dim(3);
  check(h % k == 0 && w % k == 0,
        cat("max_pool2d: input ", ta.shape_str(), " not divisible by kernel ", k));
  const int64_t ho = h / k, wo = w / k;
  Tensor out = Tensor::uninit({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<int64_t>>(
      static_cast<size_t>(out.numel()));
  int64_t oi = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* plane = ta.data() + (ni * c + ci) * h * w;
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox, ++oi) {
          int64_t best = (oy * k) * w + ox * k;
          double bv = plane[best];
          for (int64_t dy = 0; dy < k; ++dy)
            for (int64_t dx = 0; dx < k; ++dx) {
              const int64_t idx = (oy * k + dy) * w + ox * k + dx;
              if (plane[idx] > bv) {
                bv = plane[idx];
                best = idx;
              }
            }
          out[oi] = bv;
          (*argmax)[static_cast<size_t>(oi)] = (ni * c + ci) * h * w + best;
        }
    }
  return g.emit(std::move(out), {a}, [a, argmax](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    Tensor& gi = gr.grad_of(a);
    for (int64_t i = 0; i < go.numel(); ++i)
      gi[(*argmax)[static_cast<size_t>(i)]] += go[i];
  });
}

int focal_nll(Graph& g, int probs, std::vector<int> labels, double gamma,
              double eps) {
  const Tensor& tp = g.val(probs);
  check(tp.rank() == 2, cat("focal_nll: expected [N,K] probabilities, got ",
                            tp.shape_str()));
  const int64_t n = tp.dim(0), k = tp.dim(1);
  check(static_cast<int64_t>(labels.size()) == n,
        cat("focal_nll: ", labels.size(), " labels for batch of ", n));
  for (int lbl : labels)
    check(lbl >= 0 && lbl < k, cat("focal_nll: label ", lbl, " out of range [0,", k, ")"));
  Tensor out = Tensor::uninit({n});
  for (int64_t r = 0; r < n; ++r) {
    const double p = tp[r * k + labels[static_cast<size_t>(r)]];
    out[r] = -std::pow(1.0 - p, gamma) * std::log(std::max(p, eps));
  }
  return g.emit(std::move(out), {probs},
                [probs, labels = std::move(labels), gamma, eps, n, k](Graph& gr, int id) {
    const Tensor& go = gr.grad_of(id);
    const Tensor& tp2 = gr.val(probs);
    Tensor& gi = gr.grad_of(probs);
    for (int64_t r = 0; r < n; ++r) {
      const int64_t idx = r * k + labels[static_cast<size_t>(r)];
      const double p = tp2[idx];
      const double q = 1.0 - p;
      double dldp;
      if (p < eps) {
        dldp = (gamma > 0.0) ? gamma * std::pow(q, gamma - 1.0) * std::log(eps) : 0.0;
      } else if (q <= 0.0) {
        dldp = (gamma == 0.0) ? -1.0 / p : 0.0;
      } else {
        const double mod = (gamma == 0.0) ? 0.0
                                          : gamma * std::pow(q, gamma - 1.0) * std::log(p);
        dldp = mod - std::pow(q, gamma) / p;
      }
      gi[idx] += go[r] * dldp;
    }
  });
}

}  // namespace nw::ops
