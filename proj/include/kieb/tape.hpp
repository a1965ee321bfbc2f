#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kieb/tensor.hpp"

namespace kieb {

// Record of one forward pass. Holds the node values/gradients and the
// backward closures in forward order; backward() replays them in exact
// reverse order. A tape is consumed by at most one backward pass.
template <typename T>
class Tape {
 public:
  explicit Tape(bool track_params = false) : track_params_(track_params) {}

  int push(Tensor4<T> value) {
    nodes_.push_back(Node{std::move(value), Tensor4<T>{}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Tensor4<T>& value(int id) const { return nodes_[id].value; }

  Tensor4<T>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
      const auto& v = n.value;
      n.grad = Tensor4<T>(v.batch(), v.channels(), v.height(), v.width());
    }
    return n.grad;
  }

  void record(std::function<void(Tape&)> back) {
    back_ops_.push_back(std::move(back));
  }

  bool track_params() const { return track_params_; }

  // Lazily sized flat gradient buffer for model parameters.
  std::vector<T>& param_grads(std::size_t param_count) {
    if (param_grads_.size() != param_count) {
      param_grads_.assign(param_count, T(0));
    }
    return param_grads_;
  }
  std::vector<T>& param_grads() { return param_grads_; }

  // Seeds d(output)/d(output) per batch item of the (b,1,1,1) output node,
  // then walks the recorded ops in reverse.
  void backward(int output_id, const std::vector<T>& seed_per_item) {
    if (consumed_) {
      throw ParamError("Tape: backward called twice on the same tape");
    }
    consumed_ = true;
    Tensor4<T>& g = grad(output_id);
    if (g.size() != seed_per_item.size()) {
      throw ShapeError("Tape::backward: seed length does not match output batch");
    }
    for (std::size_t i = 0; i < seed_per_item.size(); ++i) {
      g.data()[i] = seed_per_item[i];
    }
    for (auto it = back_ops_.rbegin(); it != back_ops_.rend(); ++it) {
      (*it)(*this);
    }
  }

  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor4<T> value;
    Tensor4<T> grad;
  };

  std::vector<Node> nodes_;
  std::vector<std::function<void(Tape&)>> back_ops_;
  std::vector<T> param_grads_;
  bool track_params_ = false;
  bool consumed_ = false;
};

}  // namespace kieb
