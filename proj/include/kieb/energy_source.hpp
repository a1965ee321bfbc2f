#pragma once

#include <vector>

#include "kieb/tensor.hpp"

namespace kieb {

// Anything that assigns a scalar energy per batch item and can differentiate
// it with respect to the input. Langevin sampling runs against this interface;
// tests plug in analytic energies.
template <typename T>
class EnergySource {
 public:
  virtual ~EnergySource() = default;

  // One energy value per batch item.
  virtual std::vector<T> energy(const Tensor4<T>& x) const = 0;

  // d(energy)/d(input), same shape as x, computed per batch item.
  virtual Tensor4<T> input_gradient(const Tensor4<T>& x) const = 0;
};

}  // namespace kieb
