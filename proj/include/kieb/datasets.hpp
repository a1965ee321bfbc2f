#pragma once

#include <vector>

#include "kieb/coils.hpp"
#include "kieb/complex_types.hpp"
#include "kieb/recon.hpp"
#include "kieb/tensor.hpp"

namespace kieb {

struct PhantomCase {
  RealImage truth;
  SensitivityMaps sens;
};

// Per-coil training samples, each normalized to unit maximum magnitude and
// viewed as a (1, 2, h, w) tensor. The models are trained on single-coil data.
std::vector<Tensor4<double>> image_domain_samples(const std::vector<PhantomCase>& cases);

// Same coils taken to weighted k-space before normalization.
std::vector<Tensor4<double>> kspace_domain_samples(const std::vector<PhantomCase>& cases,
                                                   const WeightParams& wp);

template <typename T>
std::vector<Tensor4<T>> cast_samples(const std::vector<Tensor4<double>>& in) {
  std::vector<Tensor4<T>> out;
  out.reserve(in.size());
  for (const auto& t : in) out.push_back(t.template cast<T>());
  return out;
}

}  // namespace kieb
