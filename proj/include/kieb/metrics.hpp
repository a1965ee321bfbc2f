#pragma once

#include "kieb/complex_types.hpp"

namespace kieb {

struct MetricReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  double data_range = 1.0;
};

// 10*log10(data_range^2 / MSE), capped at 200 dB (identical inputs hit the cap).
double psnr(const RealImage& x, const RealImage& ref, double data_range);

// Mean local SSIM over full 11x11 windows, Gaussian-weighted (sigma 1.5),
// K1 = 0.01, K2 = 0.03.
double ssim(const RealImage& x, const RealImage& ref, double data_range);

// Both metrics with the images rescaled so the reference maximum equals 1.
MetricReport evaluate(const RealImage& x, const RealImage& ref);

}  // namespace kieb
