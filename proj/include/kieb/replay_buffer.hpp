#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kieb/errors.hpp"
#include "kieb/tensor.hpp"

namespace kieb {

// Store of past negative samples used to initialize new Langevin chains.
// Bounded; a uniformly random entry is overwritten on overflow.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity, std::uint64_t seed = 0)
      : capacity_(capacity), rng_(seed) {
    if (capacity < 1) throw ParamError("ReplayBuffer: capacity must be >= 1");
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  void push(Tensor4<T> sample) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(sample));
      return;
    }
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    items_[pick(rng_)] = std::move(sample);
  }

  const Tensor4<T>& sample() {
    if (items_.empty()) throw ParamError("ReplayBuffer: sample from empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    return items_[pick(rng_)];
  }

 private:
  std::size_t capacity_;
  std::vector<Tensor4<T>> items_;
  std::mt19937_64 rng_;
};

}  // namespace kieb
