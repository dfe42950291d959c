#include "nw/kernels.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstring>

namespace nw::kernels {

namespace {
using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline int64_t div_ceil(int64_t a, int64_t b) { return (a + b - 1) / b; }
}  // namespace

void gemm_acc(const double* a, const double* b, double* c, int64_t m,
              int64_t k, int64_t n) {
  MatMap C(c, m, n);
  C.noalias() += CMatMap(a, m, k) * CMatMap(b, k, n);
}

void gemm_set(const double* a, const double* b, double* c, int64_t m,
              int64_t k, int64_t n) {
  MatMap C(c, m, n);
  C.noalias() = CMatMap(a, m, k) * CMatMap(b, k, n);
}

void gemm_abt_acc(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n) {
  MatMap C(c, m, n);
  C.noalias() += CMatMap(a, m, k) * CMatMap(b, n, k).transpose();
}

void gemm_atb_acc(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n) {
  MatMap C(c, m, n);
  C.noalias() += CMatMap(a, k, m).transpose() * CMatMap(b, k, n);
}

void gemm_atb_set(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n) {
  MatMap C(c, m, n);
  C.noalias() = CMatMap(a, k, m).transpose() * CMatMap(b, k, n);
}

void im2col(const double* x, int64_t n, int64_t c, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* col) {
  const int64_t ho = (h + 2 * pad - kh) / stride + 1;
  const int64_t wo = (w + 2 * pad - kw) / stride + 1;
  const int64_t cols = n * ho * wo;
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      // rows with iy in range: oy*stride - pad + ky in [0, h)
      const int64_t oy_lo = std::clamp<int64_t>(div_ceil(pad - ky, stride), 0, ho);
      const int64_t oy_hi = std::clamp<int64_t>((h - 1 - ky + pad) / stride + 1, oy_lo, ho);
      for (int64_t kx = 0; kx < kw; ++kx) {
        const int64_t ox_lo = std::clamp<int64_t>(div_ceil(pad - kx, stride), 0, wo);
        const int64_t ox_hi = std::clamp<int64_t>((w - 1 - kx + pad) / stride + 1, ox_lo, wo);
        double* dst = col + ((ci * kh + ky) * kw + kx) * cols;
        for (int64_t ni = 0; ni < n; ++ni) {
          const double* src = x + (ni * c + ci) * h * w;
          double* dplane = dst + ni * ho * wo;
          if (oy_lo > 0) std::memset(dplane, 0, sizeof(double) * oy_lo * wo);
          for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
            const int64_t iy = oy * stride - pad + ky;
            const double* srow = src + iy * w - pad + kx;
            double* drow = dplane + oy * wo;
            for (int64_t ox = 0; ox < ox_lo; ++ox) drow[ox] = 0.0;
            if (stride == 1) {
              std::memcpy(drow + ox_lo, srow + ox_lo,
                          sizeof(double) * (ox_hi - ox_lo));
            } else {
              for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                drow[ox] = srow[ox * stride];
            }
            for (int64_t ox = ox_hi; ox < wo; ++ox) drow[ox] = 0.0;
          }
          if (oy_hi < ho)
            std::memset(dplane + oy_hi * wo, 0, sizeof(double) * (ho - oy_hi) * wo);
        }
      }
    }
  }
}

void col2im_acc(const double* col, int64_t n, int64_t c, int64_t h, int64_t w,
                int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* x) {
  const int64_t ho = (h + 2 * pad - kh) / stride + 1;
  const int64_t wo = (w + 2 * pad - kw) / stride + 1;
  const int64_t cols = n * ho * wo;
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      const int64_t oy_lo = std::clamp<int64_t>(div_ceil(pad - ky, stride), 0, ho);
      const int64_t oy_hi = std::clamp<int64_t>((h - 1 - ky + pad) / stride + 1, oy_lo, ho);
      for (int64_t kx = 0; kx < kw; ++kx) {
        const int64_t ox_lo = std::clamp<int64_t>(div_ceil(pad - kx, stride), 0, wo);
        const int64_t ox_hi = std::clamp<int64_t>((w - 1 - kx + pad) / stride + 1, ox_lo, wo);
        const double* src = col + ((ci * kh + ky) * kw + kx) * cols;
        for (int64_t ni = 0; ni < n; ++ni) {
          double* dst = x + (ni * c + ci) * h * w;
          const double* splane = src + ni * ho * wo;
          for (int64_t oy = oy_lo; oy < oy_hi; ++oy) {
            const int64_t iy = oy * stride - pad + ky;
            double* drow = dst + iy * w - pad + kx;
            const double* srow = splane + oy * wo;
            if (stride == 1) {
              for (int64_t ox = ox_lo; ox < ox_hi; ++ox) drow[ox] += srow[ox];
            } else {
              for (int64_t ox = ox_lo; ox < ox_hi; ++ox)
                drow[ox * stride] += srow[ox];
            }
          }
        }
      }
    }
  }
}

void nchw_to_c_nhw(const double* x, int64_t n, int64_t c, int64_t hw, double* out) {
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci)
      std::memcpy(out + ci * n * hw + ni * hw, x + (ni * c + ci) * hw,
                  sizeof(double) * hw);
}

void c_nhw_to_nchw_acc(const double* in, int64_t n, int64_t c, int64_t hw, double* x) {
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci) {
      const double* src = in + ci * n * hw + ni * hw;
      double* dst = x + (ni * c + ci) * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] += src[i];
    }
}

}  // namespace nw::kernels
