#pragma once

#include <complex>
#include <vector>

#include "kieb/errors.hpp"
#include "kieb/tensor.hpp"

namespace kieb {

using cdouble = std::complex<double>;

// Real-valued H x W image (phantoms, SOS outputs, metric inputs).
struct RealImage {
  int h = 0, w = 0;
  std::vector<double> data;

  RealImage() = default;
  RealImage(int height, int width, double fill = 0.0)
      : h(height), w(width), data(static_cast<std::size_t>(height) * width, fill) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
  std::size_t size() const { return data.size(); }

  double max_value() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, v);
    return m;
  }
};

// Complex H x W plane: an image or one k-space plane.
struct ComplexImage {
  int h = 0, w = 0;
  std::vector<cdouble> data;

  ComplexImage() = default;
  ComplexImage(int height, int width)
      : h(height), w(width), data(static_cast<std::size_t>(height) * width) {}

  cdouble& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  cdouble at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
  std::size_t size() const { return data.size(); }
};

// C complex planes: per-coil images I_c or per-coil k-space K_c.
struct CoilStack {
  int coils = 0, h = 0, w = 0;
  std::vector<cdouble> data;

  CoilStack() = default;
  CoilStack(int n_coils, int height, int width)
      : coils(n_coils),
        h(height),
        w(width),
        data(static_cast<std::size_t>(n_coils) * height * width) {}

  cdouble* plane(int c) { return data.data() + static_cast<std::size_t>(c) * h * w; }
  const cdouble* plane(int c) const {
    return data.data() + static_cast<std::size_t>(c) * h * w;
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return data.size(); }

  ComplexImage coil(int c) const {
    ComplexImage img(h, w);
    std::copy_n(plane(c), plane_size(), img.data.data());
    return img;
  }
  void set_coil(int c, const ComplexImage& img) {
    if (img.h != h || img.w != w) throw ShapeError("CoilStack::set_coil: shape mismatch");
    std::copy_n(img.data.data(), plane_size(), plane(c));
  }

  bool same_shape(const CoilStack& o) const {
    return coils == o.coils && h == o.h && w == o.w;
  }
};

// Two-channel (real, imag) views. The round trip is bit-exact.
inline Tensor4<double> two_channel(const ComplexImage& img) {
  Tensor4<double> t(1, 2, img.h, img.w);
  double* re = t.plane(0, 0);
  double* im = t.plane(0, 1);
  for (std::size_t i = 0; i < img.size(); ++i) {
    re[i] = img.data[i].real();
    im[i] = img.data[i].imag();
  }
  return t;
}

inline ComplexImage from_two_channel(const Tensor4<double>& t) {
  if (t.batch() != 1 || t.channels() != 2) {
    throw ShapeError("from_two_channel: expected (1,2,h,w) tensor");
  }
  ComplexImage img(t.height(), t.width());
  const double* re = t.plane(0, 0);
  const double* im = t.plane(0, 1);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = cdouble(re[i], im[i]);
  return img;
}

// Coil stack as a network batch: (coils, 2, h, w).
inline Tensor4<double> two_channel(const CoilStack& s) {
  Tensor4<double> t(s.coils, 2, s.h, s.w);
  for (int c = 0; c < s.coils; ++c) {
    const cdouble* p = s.plane(c);
    double* re = t.plane(c, 0);
    double* im = t.plane(c, 1);
    for (std::size_t i = 0; i < s.plane_size(); ++i) {
      re[i] = p[i].real();
      im[i] = p[i].imag();
    }
  }
  return t;
}

inline CoilStack stack_from_two_channel(const Tensor4<double>& t) {
  if (t.channels() != 2) throw ShapeError("stack_from_two_channel: expected 2 channels");
  CoilStack s(t.batch(), t.height(), t.width());
  for (int c = 0; c < s.coils; ++c) {
    cdouble* p = s.plane(c);
    const double* re = t.plane(c, 0);
    const double* im = t.plane(c, 1);
    for (std::size_t i = 0; i < s.plane_size(); ++i) p[i] = cdouble(re[i], im[i]);
  }
  return s;
}

inline double max_magnitude(const ComplexImage& img) {
  double m = 0.0;
  for (const cdouble& v : img.data) m = std::max(m, std::abs(v));
  return m;
}

inline double max_magnitude(const CoilStack& s) {
  double m = 0.0;
  for (const cdouble& v : s.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace kieb
