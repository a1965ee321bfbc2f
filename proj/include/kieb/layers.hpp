#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "kieb/activation_kernels.hpp"
#include "kieb/tensor.hpp"

// Forward/backward kernels for the fixed layer set of the energy network:
// 3x3 (and 1x1 projection) convolutions with "same" zero padding, swish,
// elementwise add, global sum pooling and the final dense-to-scalar layer.
// Inner loops run over the width dimension so the compiler can vectorize.

namespace kieb {

// Non-owning view of one convolution's parameters.
// Kernel layout: (out_ch, in_ch, kh, kw) row-major; bias length out_ch.
template <typename T>
struct ConvWeights {
  const T* kernel = nullptr;
  const T* bias = nullptr;  // may be null (no bias)
  int out_ch = 0;
  int in_ch = 0;
  int kh = 0;
  int kw = 0;
};

inline int conv_out_dim(int in, int stride) { return (in + stride - 1) / stride; }

namespace detail {

// Valid output range [lo, hi) so that o*stride + shift stays inside [0, in).
inline int out_lo(int shift, int stride) {
  return shift >= 0 ? 0 : (-shift + stride - 1) / stride;
}
inline int out_hi(int shift, int stride, int in, int out) {
  const int hi = (in - 1 - shift) / stride + 1;
  return hi < out ? hi : out;
}

// Patch matrix for one batch item: row (ic,ky,kx), column (oy,ox). Rows are
// the kernel-order unrolling of the receptive field, so the conv kernel acts
// as a plain (out_ch x K) matrix on it.
template <typename T>
void im2col(const T* x, int in_ch, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, T* out) {
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  T* row = out;
  for (int ic = 0; ic < in_ch; ++ic) {
    const T* xp = x + static_cast<std::size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, row += n) {
        const int sy = ky - pad;
        const int sx = kx - pad;
        const int ox_lo = out_lo(sx, stride);
        const int ox_hi = out_hi(sx, stride, w, ow);
        const int oy_lo = out_lo(sy, stride);
        const int oy_hi = out_hi(sy, stride, h, oh);
        std::fill(row, row + n, T(0));
        for (int oy = oy_lo; oy < oy_hi; ++oy) {
          T* __restrict__ dst = row + static_cast<std::size_t>(oy) * ow;
          const T* __restrict__ src =
              xp + static_cast<std::size_t>(oy * stride + sy) * w;
          if (stride == 1) {
            const T* s = src + sx;
            for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = s[ox];
          } else {
            for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = src[ox * stride + sx];
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back onto the input plane (adjoint of im2col).
template <typename T>
void col2im_add(const T* cols, int in_ch, int h, int w, int kh, int kw, int stride,
                int pad, int oh, int ow, T* gx) {
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  const T* row = cols;
  for (int ic = 0; ic < in_ch; ++ic) {
    T* gp = gx + static_cast<std::size_t>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, row += n) {
        const int sy = ky - pad;
        const int sx = kx - pad;
        const int ox_lo = out_lo(sx, stride);
        const int ox_hi = out_hi(sx, stride, w, ow);
        const int oy_lo = out_lo(sy, stride);
        const int oy_hi = out_hi(sy, stride, h, oh);
        for (int oy = oy_lo; oy < oy_hi; ++oy) {
          const T* __restrict__ src = row + static_cast<std::size_t>(oy) * ow;
          T* __restrict__ dst = gp + static_cast<std::size_t>(oy * stride + sy) * w;
          if (stride == 1) {
            T* d = dst + sx;
            for (int ox = ox_lo; ox < ox_hi; ++ox) d[ox] += src[ox];
          } else {
            for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox * stride + sx] += src[ox];
          }
        }
      }
    }
  }
}

// Register-blocked micro-kernel: a 4 x NT accumulator tile lives in
// registers across the whole k loop, so C is touched once per tile.
// `lda_row, lda_col` express A(row, col) = a[row*lda_row + col*lda_col],
// which lets the same kernel serve both A and A^T operand layouts.
template <int NT, typename T>
void gemm_panel(int m_dim, int k_dim, int n_dim, const T* a, std::size_t lda_row,
                std::size_t lda_col, const T* b, T* c) {
  const std::size_t n = static_cast<std::size_t>(n_dim);
  for (int n0 = 0; n0 < n_dim; n0 += NT) {
    const int nw = std::min(NT, n_dim - n0);
    for (int m0 = 0; m0 < m_dim; m0 += 4) {
      const int mw = std::min(4, m_dim - m0);
      T acc[4][NT];
      for (int r = 0; r < mw; ++r) std::fill(acc[r], acc[r] + nw, T(0));
      if (mw == 4 && nw == NT) {
        for (int k = 0; k < k_dim; ++k) {
          const T* __restrict__ br = b + static_cast<std::size_t>(k) * n + n0;
          const T w0 = a[(m0 + 0) * lda_row + k * lda_col];
          const T w1 = a[(m0 + 1) * lda_row + k * lda_col];
          const T w2 = a[(m0 + 2) * lda_row + k * lda_col];
          const T w3 = a[(m0 + 3) * lda_row + k * lda_col];
          for (int j = 0; j < NT; ++j) {
            const T bv = br[j];
            acc[0][j] += w0 * bv;
            acc[1][j] += w1 * bv;
            acc[2][j] += w2 * bv;
            acc[3][j] += w3 * bv;
          }
        }
      } else {
        for (int k = 0; k < k_dim; ++k) {
          const T* __restrict__ br = b + static_cast<std::size_t>(k) * n + n0;
          for (int r = 0; r < mw; ++r) {
            const T w = a[(m0 + r) * lda_row + k * lda_col];
            for (int j = 0; j < nw; ++j) acc[r][j] += w * br[j];
          }
        }
      }
      for (int r = 0; r < mw; ++r) {
        T* __restrict__ cr = c + static_cast<std::size_t>(m0 + r) * n + n0;
        for (int j = 0; j < nw; ++j) cr[j] += acc[r][j];
      }
    }
  }
}

template <typename T>
void gemm_tiled(int m_dim, int k_dim, int n_dim, const T* a, std::size_t lda_row,
                std::size_t lda_col, const T* b, T* c) {
  constexpr int kWide = 256 / sizeof(T);   // 64 floats / 32 doubles
  constexpr int kNarrow = 64 / sizeof(T);  // one vector register
  if (n_dim >= kWide) {
    gemm_panel<kWide>(m_dim, k_dim, n_dim, a, lda_row, lda_col, b, c);
  } else {
    gemm_panel<kNarrow>(m_dim, k_dim, n_dim, a, lda_row, lda_col, b, c);
  }
}

// C(M x N) += A(M x K) * B(K x N), all row-major, C preinitialized.
template <typename T>
void gemm_accum(int m_dim, int k_dim, int n_dim, const T* a, const T* b, T* c) {
  gemm_tiled(m_dim, k_dim, n_dim, a, static_cast<std::size_t>(k_dim), 1, b, c);
}

// C(K x N) += A(M x K)^T * B(M x N), row-major.
template <typename T>
void gemm_at_accum(int m_dim, int k_dim, int n_dim, const T* a, const T* b, T* c) {
  gemm_tiled(k_dim, m_dim, n_dim, a, 1, static_cast<std::size_t>(k_dim), b, c);
}

// C(M x K) += A(M x N) * B(K x N)^T: rows of C are dots of A rows with B rows.
template <typename T>
void gemm_abt_accum(int m_dim, int k_dim, int n_dim, const T* a, const T* b, T* c) {
  const std::size_t n = static_cast<std::size_t>(n_dim);
  for (int m = 0; m < m_dim; ++m) {
    const T* __restrict__ ar = a + static_cast<std::size_t>(m) * n;
    T* cr = c + static_cast<std::size_t>(m) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T* __restrict__ br = b + static_cast<std::size_t>(k) * n;
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += ar[j] * br[j];
      cr[k] += acc;
    }
  }
}

}  // namespace detail

template <typename T>
Tensor4<T> conv2d(const Tensor4<T>& x, const ConvWeights<T>& w, int stride) {
  if (w.in_ch != x.channels()) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(w.in_ch) +
                     " input channels, got " + std::to_string(x.channels()));
  }
  if (stride != 1 && stride != 2) throw ParamError("conv2d: stride must be 1 or 2");
  const int pad = (w.kh - 1) / 2;
  const int oh = conv_out_dim(x.height(), stride);
  const int ow = conv_out_dim(x.width(), stride);
  const int k_dim = w.in_ch * w.kh * w.kw;
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  Tensor4<T> y(x.batch(), w.out_ch, oh, ow);

  std::vector<T> cols(static_cast<std::size_t>(k_dim) * n);
  for (int b = 0; b < x.batch(); ++b) {
    detail::im2col(x.plane(b, 0), w.in_ch, x.height(), x.width(), w.kh, w.kw,
                   stride, pad, oh, ow, cols.data());
    T* yp = y.plane(b, 0);
    if (w.bias) {
      for (int oc = 0; oc < w.out_ch; ++oc) {
        std::fill(yp + oc * n, yp + (oc + 1) * n, w.bias[oc]);
      }
    }
    detail::gemm_accum(w.out_ch, k_dim, static_cast<int>(n), w.kernel, cols.data(), yp);
  }
  return y;
}

// Gradient of conv2d w.r.t. its input (scatter form of the correlation).
template <typename T>
Tensor4<T> conv2d_backward_input(const Tensor4<T>& gy, const ConvWeights<T>& w,
                                 int stride, int in_h, int in_w) {
  const int pad = (w.kh - 1) / 2;
  const int oh = gy.height();
  const int ow = gy.width();
  const int k_dim = w.in_ch * w.kh * w.kw;
  const std::size_t n = static_cast<std::size_t>(oh) * ow;
  Tensor4<T> gx(gy.batch(), w.in_ch, in_h, in_w);

  std::vector<T> cols(static_cast<std::size_t>(k_dim) * n);
  for (int b = 0; b < gy.batch(); ++b) {
    std::fill(cols.begin(), cols.end(), T(0));
    detail::gemm_at_accum(w.out_ch, k_dim, static_cast<int>(n), w.kernel,
                          gy.plane(b, 0), cols.data());
    detail::col2im_add(cols.data(), w.in_ch, in_h, in_w, w.kh, w.kw, stride, pad,
                       oh, ow, gx.plane(b, 0));
  }
  return gx;
}

// Gradients of conv2d w.r.t. kernel (into gkernel, length out*in*kh*kw) and
// bias (into gbias, length out_ch; skipped when null). Accumulates.
template <typename T>
void conv2d_backward_params(const Tensor4<T>& gy, const Tensor4<T>& x,
                            const ConvWeights<T>& w, int stride, T* gkernel,
                            T* gbias) {
  const int pad = (w.kh - 1) / 2;
  const int oh = gy.height();
  const int ow = gy.width();
  const int k_dim = w.in_ch * w.kh * w.kw;
  const std::size_t n = static_cast<std::size_t>(oh) * ow;

  std::vector<T> cols(static_cast<std::size_t>(k_dim) * n);
  for (int b = 0; b < gy.batch(); ++b) {
    const T* gp = gy.plane(b, 0);
    if (gbias) {
      for (int oc = 0; oc < w.out_ch; ++oc) {
        const T* __restrict__ row = gp + oc * n;
        T acc = T(0);
        for (std::size_t i = 0; i < n; ++i) acc += row[i];
        gbias[oc] += acc;
      }
    }
    detail::im2col(x.plane(b, 0), w.in_ch, x.height(), x.width(), w.kh, w.kw,
                   stride, pad, oh, ow, cols.data());
    detail::gemm_abt_accum(w.out_ch, k_dim, static_cast<int>(n), gp, cols.data(),
                           gkernel);
  }
}

template <typename T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// x * sigmoid(x); smooth, so the sampled energy keeps a continuous gradient.
template <typename T>
Tensor4<T> swish(const Tensor4<T>& x) {
  Tensor4<T> y(x.batch(), x.channels(), x.height(), x.width());
  detail::swish_forward(x.data(), y.data(), x.size());
  return y;
}

template <typename T>
Tensor4<T> swish_backward(const Tensor4<T>& x, const Tensor4<T>& gy) {
  Tensor4<T> gx(x.batch(), x.channels(), x.height(), x.width());
  detail::swish_backward(x.data(), gy.data(), gx.data(), x.size());
  return gx;
}

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  Tensor4<T> y = a;
  T* yp = y.data();
  const T* bp = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) yp[i] += bp[i];
  return y;
}

// Spatial sum per (batch, channel); output shape (batch, channels, 1, 1).
template <typename T>
Tensor4<T> global_sum_pool(const Tensor4<T>& x) {
  Tensor4<T> y(x.batch(), x.channels(), 1, 1);
  const std::size_t n = static_cast<std::size_t>(x.height()) * x.width();
  for (int b = 0; b < x.batch(); ++b) {
    for (int c = 0; c < x.channels(); ++c) {
      const T* xp = x.plane(b, c);
      T acc = T(0);
      for (std::size_t i = 0; i < n; ++i) acc += xp[i];
      y(b, c, 0, 0) = acc;
    }
  }
  return y;
}

template <typename T>
Tensor4<T> global_sum_pool_backward(const Tensor4<T>& gy, int in_h, int in_w) {
  Tensor4<T> gx(gy.batch(), gy.channels(), in_h, in_w);
  const std::size_t n = static_cast<std::size_t>(in_h) * in_w;
  for (int b = 0; b < gy.batch(); ++b) {
    for (int c = 0; c < gy.channels(); ++c) {
      const T g = gy(b, c, 0, 0);
      T* gxp = gx.plane(b, c);
      for (std::size_t i = 0; i < n; ++i) gxp[i] = g;
    }
  }
  return gx;
}

// Pre-activation residual block: shortcut(x) + conv2(swish(conv1(swish(x)))).
// Downsampling blocks stride the first convolution and use a 1x1 strided
// projection shortcut; `proj` may also be non-null for a pure channel change.
template <typename T>
Tensor4<T> resblock(const Tensor4<T>& x, const ConvWeights<T>& conv1,
                    const ConvWeights<T>& conv2, const ConvWeights<T>* proj,
                    bool downsample) {
  const int stride = downsample ? 2 : 1;
  Tensor4<T> path = conv2d(swish(conv2d(swish(x), conv1, stride)), conv2, 1);
  if (proj) {
    return add(conv2d(x, *proj, stride), path);
  }
  return add(x, path);
}

// (batch, C, 1, 1) -> (batch, 1, 1, 1): dot with weight vector plus scalar bias.
template <typename T>
Tensor4<T> dense_to_scalar(const Tensor4<T>& x, const T* weight, T bias) {
  if (x.height() != 1 || x.width() != 1) {
    throw ShapeError("dense_to_scalar: expects pooled (b,c,1,1) input");
  }
  Tensor4<T> y(x.batch(), 1, 1, 1);
  for (int b = 0; b < x.batch(); ++b) {
    T acc = bias;
    for (int c = 0; c < x.channels(); ++c) acc += weight[c] * x(b, c, 0, 0);
    y(b, 0, 0, 0) = acc;
  }
  return y;
}

}  // namespace kieb
