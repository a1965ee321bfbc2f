#pragma once

#include <cstddef>

// Elementwise swish kernels, built in their own translation unit so the
// exp calls vectorize. Results stay within a few ulp of the libm scalars.
namespace kieb::detail {

void swish_forward(const float* x, float* y, std::size_t n);
void swish_forward(const double* x, double* y, std::size_t n);
void swish_backward(const float* x, const float* gy, float* gx, std::size_t n);
void swish_backward(const double* x, const double* gy, double* gx, std::size_t n);

}  // namespace kieb::detail
