#pragma once

#include "kieb/complex_types.hpp"

namespace kieb {

// Centered orthonormal 2-D Fourier transforms: DC sits at (h/2, w/2) and both
// directions preserve the l2 norm, so fft2c and ifft2c are mutual inverses.
ComplexImage fft2c(const ComplexImage& x);
ComplexImage ifft2c(const ComplexImage& k);

CoilStack fft2c(const CoilStack& x);
CoilStack ifft2c(const CoilStack& k);

}  // namespace kieb
