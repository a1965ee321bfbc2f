#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "kieb/energy_source.hpp"
#include "kieb/errors.hpp"
#include "kieb/tensor.hpp"

namespace kieb {

// Langevin dynamics parameters. `step` is the lambda of the update rule
//   x' = x - (lambda/2) * clip(dE/dx, grad_clip) + w,  w ~ N(0, noise_scale^2 * lambda)
// and `anneal` is a geometric noise decay applied per outer reconstruction
// iteration (1 = no annealing; training leaves it off).
struct LangevinConfig {
  double step = 8.0;
  int steps = 60;
  double noise_scale = 7e-3;
  double grad_clip = 1e-2;
  double anneal = 1.0;

  void validate() const {
    if (step <= 0.0) throw ParamError("LangevinConfig: step must be positive");
    if (steps < 1) throw ParamError("LangevinConfig: steps must be >= 1");
    if (noise_scale < 0.0) throw ParamError("LangevinConfig: negative noise scale");
    if (grad_clip <= 0.0) throw ParamError("LangevinConfig: grad_clip must be positive");
    if (anneal <= 0.0 || anneal > 1.0) {
      throw ParamError("LangevinConfig: anneal must lie in (0, 1]");
    }
  }
};

// One update. Noise is drawn per element in row-major order as
// standard normal times noise_scale * sqrt(step); nothing is drawn when the
// resulting standard deviation is zero.
template <typename T>
Tensor4<T> langevin_step(const EnergySource<T>& energy, const Tensor4<T>& x,
                         double step, double noise_scale, double grad_clip,
                         std::mt19937_64& rng) {
  Tensor4<T> out = x;
  if (step > 0.0) {
    Tensor4<T> g = energy.input_gradient(x);
    const T clip = static_cast<T>(grad_clip);
    const T half_step = static_cast<T>(0.5 * step);
    T* o = out.data();
    const T* gp = g.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      o[i] -= half_step * std::clamp(gp[i], -clip, clip);
    }
  }
  const double noise_std = noise_scale * std::sqrt(step);
  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<T> omega(out.size());
    for (std::size_t i = 0; i < omega.size(); ++i) {
      omega[i] = static_cast<T>(noise_std * normal(rng));
    }
    T* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] += omega[i];
  }
  return out;
}

// cfg.steps updates in sequence; returns the final iterate.
template <typename T>
Tensor4<T> langevin_sample(const EnergySource<T>& energy, Tensor4<T> x,
                           const LangevinConfig& cfg, std::mt19937_64& rng) {
  for (int t = 0; t < cfg.steps; ++t) {
    x = langevin_step(energy, x, cfg.step, cfg.noise_scale, cfg.grad_clip, rng);
  }
  return x;
}

}  // namespace kieb
