#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "kieb/tensor.hpp"

namespace kieb::test {

inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central finite difference of the scalar functional f with respect to the
// coordinate behind `coord`. Restores the original value afterwards.
template <typename F>
double central_diff(double& coord, double h, F&& f) {
  const double orig = coord;
  coord = orig + h;
  const double fp = f();
  coord = orig - h;
  const double fm = f();
  coord = orig;
  return (fp - fm) / (2.0 * h);
}

template <typename T>
kieb::Tensor4<T> random_tensor(int b, int c, int h, int w, std::uint64_t seed,
                               double lo = -1.0, double hi = 1.0) {
  kieb::Tensor4<T> t(b, c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(dist(rng));
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                         double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace kieb::test
