#include "kieb/weighting.hpp"

#include <algorithm>
#include <cmath>

#include "kieb/errors.hpp"

namespace kieb {

WeightMatrix weight_matrix(double r, double p, int h, int w, double floor_frac) {
  if (r < 0.0 || p < 0.0) throw ParamError("weight_matrix: r and p must be >= 0");
  if (floor_frac <= 0.0) throw ParamError("weight_matrix: floor must be positive");
  WeightMatrix m;
  m.h = h;
  m.w = w;
  m.r = r;
  m.p = p;
  m.values.resize(static_cast<std::size_t>(h) * w);

  double max_unclamped = 0.0;
  for (int y = 0; y < h; ++y) {
    const double ky = y - h / 2;
    for (int x = 0; x < w; ++x) {
      const double kx = x - w / 2;
      const double v = std::pow(r * kx * kx + r * ky * ky, p);
      m.values[static_cast<std::size_t>(y) * w + x] = v;
      max_unclamped = std::max(max_unclamped, v);
    }
  }
  m.floor = floor_frac * (max_unclamped > 0.0 ? max_unclamped : 1.0);
  m.clamped.resize(m.values.size());
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.clamped[i] = m.values[i] < m.floor ? 1 : 0;
    m.values[i] = std::max(m.values[i], m.floor);
  }
  return m;
}

namespace {

void check_shape(int kh, int kw, const WeightMatrix& w) {
  if (kh != w.h || kw != w.w) throw ShapeError("weighting: shape mismatch");
}

}  // namespace

ComplexImage apply_weight(const ComplexImage& k, const WeightMatrix& w) {
  check_shape(k.h, k.w, w);
  ComplexImage out(k.h, k.w);
  for (std::size_t i = 0; i < k.size(); ++i) out.data[i] = k.data[i] * w.values[i];
  return out;
}

ComplexImage unapply_weight(const ComplexImage& k, const WeightMatrix& w) {
  check_shape(k.h, k.w, w);
  ComplexImage out(k.h, k.w);
  for (std::size_t i = 0; i < k.size(); ++i) out.data[i] = k.data[i] / w.values[i];
  return out;
}

CoilStack apply_weight(const CoilStack& k, const WeightMatrix& w) {
  check_shape(k.h, k.w, w);
  CoilStack out(k.coils, k.h, k.w);
  for (int c = 0; c < k.coils; ++c) {
    const cdouble* src = k.plane(c);
    cdouble* dst = out.plane(c);
    for (std::size_t i = 0; i < k.plane_size(); ++i) dst[i] = src[i] * w.values[i];
  }
  return out;
}

CoilStack unapply_weight(const CoilStack& k, const WeightMatrix& w) {
  check_shape(k.h, k.w, w);
  CoilStack out(k.coils, k.h, k.w);
  for (int c = 0; c < k.coils; ++c) {
    const cdouble* src = k.plane(c);
    cdouble* dst = out.plane(c);
    for (std::size_t i = 0; i < k.plane_size(); ++i) dst[i] = src[i] / w.values[i];
  }
  return out;
}

}  // namespace kieb
