#include "kieb/activation_kernels.hpp"

#include <cmath>

namespace kieb::detail {

namespace {

template <typename T>
void fwd(const T* __restrict__ x, T* __restrict__ y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const T s = T(1) / (T(1) + std::exp(-x[i]));
    y[i] = x[i] * s;
  }
}

template <typename T>
void bwd(const T* __restrict__ x, const T* __restrict__ gy, T* __restrict__ gx,
         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const T s = T(1) / (T(1) + std::exp(-x[i]));
    gx[i] = gy[i] * (s + x[i] * s * (T(1) - s));
  }
}

}  // namespace

void swish_forward(const float* x, float* y, std::size_t n) { fwd(x, y, n); }
void swish_forward(const double* x, double* y, std::size_t n) { fwd(x, y, n); }
void swish_backward(const float* x, const float* gy, float* gx, std::size_t n) {
  bwd(x, gy, gx, n);
}
void swish_backward(const double* x, const double* gy, double* gx, std::size_t n) {
  bwd(x, gy, gx, n);
}

}  // namespace kieb::detail
