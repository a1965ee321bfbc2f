#include "kieb/datasets.hpp"

#include "kieb/fft.hpp"
#include "kieb/weighting.hpp"

namespace kieb {
namespace {

Tensor4<double> normalized_sample(const ComplexImage& img) {
  const double m = max_magnitude(img);
  ComplexImage scaled = img;
  if (m > 0.0) {
    for (cdouble& v : scaled.data) v /= m;
  }
  return two_channel(scaled);
}

}  // namespace

std::vector<Tensor4<double>> image_domain_samples(const std::vector<PhantomCase>& cases) {
  std::vector<Tensor4<double>> out;
  for (const PhantomCase& pc : cases) {
    ComplexImage img(pc.truth.h, pc.truth.w);
    for (std::size_t i = 0; i < img.size(); ++i) {
      img.data[i] = cdouble(pc.truth.data[i], 0.0);
    }
    CoilStack coils = apply_sensitivities(img, pc.sens);
    for (int c = 0; c < coils.coils; ++c) {
      out.push_back(normalized_sample(coils.coil(c)));
    }
  }
  return out;
}

std::vector<Tensor4<double>> kspace_domain_samples(const std::vector<PhantomCase>& cases,
                                                   const WeightParams& wp) {
  std::vector<Tensor4<double>> out;
  if (cases.empty()) return out;
  const WeightMatrix w = weight_matrix(wp.r, wp.p, cases.front().truth.h,
                                       cases.front().truth.w, wp.floor_frac);
  for (const PhantomCase& pc : cases) {
    ComplexImage img(pc.truth.h, pc.truth.w);
    for (std::size_t i = 0; i < img.size(); ++i) {
      img.data[i] = cdouble(pc.truth.data[i], 0.0);
    }
    CoilStack coils = apply_sensitivities(img, pc.sens);
    for (int c = 0; c < coils.coils; ++c) {
      out.push_back(normalized_sample(apply_weight(fft2c(coils.coil(c)), w)));
    }
  }
  return out;
}

}  // namespace kieb
