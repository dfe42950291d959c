#pragma once

#include <cstdint>

namespace nw::kernels {

// Row-major GEMM helpers. _acc accumulates into C, _set overwrites it.
void gemm_acc(const double* a, const double* b, double* c, int64_t m,
              int64_t k, int64_t n);
void gemm_set(const double* a, const double* b, double* c, int64_t m,
              int64_t k, int64_t n);
// C[M,N] (+)= A[M,K] * B[N,K]^T
void gemm_abt_acc(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n);
// C[M,N] (+)= A[K,M]^T * B[K,N]
void gemm_atb_acc(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n);
void gemm_atb_set(const double* a, const double* b, double* c, int64_t m,
                  int64_t k, int64_t n);

// Patch gather/scatter for convolution by GEMM. The column buffer has one
// row per (channel, ky, kx) and one column per (sample, oy, ox).
void im2col(const double* x, int64_t n, int64_t c, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* col);
void col2im_acc(const double* col, int64_t n, int64_t c, int64_t h, int64_t w,
                int64_t kh, int64_t kw, int64_t stride, int64_t pad, double* x);

// [N,C,H,W] -> [C, N*H*W] gather and its scatter-accumulate inverse.
void nchw_to_c_nhw(const double* x, int64_t n, int64_t c, int64_t hw, double* out);
void c_nhw_to_nchw_acc(const double* in, int64_t n, int64_t c, int64_t hw, double* x);

}  // namespace nw::kernels
