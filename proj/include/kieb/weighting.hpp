#pragma once

#include <cstdint>

#include "kieb/complex_types.hpp"

namespace kieb {

// High-pass weighting w(v) = (r*kx^2 + r*ky^2)^p over centered integer
// frequency coordinates, clamped below so that dividing by w stays defined.
struct WeightMatrix {
  int h = 0, w = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> clamped;  // 1 where the floor replaced the raw value
  double r = 0.0;
  double p = 0.0;
  double floor = 0.0;  // absolute clamp actually applied

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
  bool clamped_at(std::size_t i) const { return clamped[i] != 0; }
};

// floor_frac is relative to the largest unclamped weight.
WeightMatrix weight_matrix(double r, double p, int h, int w,
                           double floor_frac = 1e-3);

ComplexImage apply_weight(const ComplexImage& k, const WeightMatrix& w);
ComplexImage unapply_weight(const ComplexImage& k, const WeightMatrix& w);
CoilStack apply_weight(const CoilStack& k, const WeightMatrix& w);
CoilStack unapply_weight(const CoilStack& k, const WeightMatrix& w);

}  // namespace kieb
