#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kieb/errors.hpp"

namespace kieb {

// Adam with bias correction. Moment buffers mirror the flat parameter vector.
template <typename T>
struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<T> m, v;
};

template <typename T>
void adam_update(AdamState<T>& state, std::vector<T>& params,
                 const std::vector<T>& grad) {
  if (params.size() != grad.size()) {
    throw ShapeError("adam_update: gradient/parameter size mismatch");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
  }
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step_count));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grad[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= static_cast<T>(state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
  }
}

}  // namespace kieb
