#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "kieb/errors.hpp"

namespace kieb {

// Dense (batch, channels, height, width) tensor, contiguous row-major.
// Used for network inputs/activations and the two-channel view of complex data.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;

  Tensor4(int batch, int channels, int height, int width, T fill = T(0))
      : b_(batch), c_(channels), h_(height), w_(width) {
    if (batch < 0 || channels < 0 || height < 0 || width < 0) {
      throw ShapeError("Tensor4: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(batch) * channels * height * width, fill);
  }

  static Tensor4 from_data(int batch, int channels, int height, int width,
                           std::vector<T> data) {
    Tensor4 t;
    t.b_ = batch;
    t.c_ = channels;
    t.h_ = height;
    t.w_ = width;
    const std::size_t expect =
        static_cast<std::size_t>(batch) * channels * height * width;
    if (data.size() != expect) {
      throw ShapeError("Tensor4::from_data: data length " +
                       std::to_string(data.size()) + " does not match shape");
    }
    for (const T v : data) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError("Tensor4::from_data: non-finite entry");
      }
    }
    t.data_ = std::move(data);
    return t;
  }

  int batch() const { return b_; }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::array<int, 4> shape() const { return {b_, c_, h_, w_}; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator()(int b, int c, int y, int x) {
    return data_[idx(b, c, y, x)];
  }
  T operator()(int b, int c, int y, int x) const {
    return data_[idx(b, c, y, x)];
  }

  T* plane(int b, int c) { return data_.data() + idx(b, c, 0, 0); }
  const T* plane(int b, int c) const { return data_.data() + idx(b, c, 0, 0); }

  bool same_shape(const Tensor4& o) const {
    return b_ == o.b_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (const T v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  // One batch item as a (1, c, h, w) tensor.
  Tensor4 slice(int b) const {
    Tensor4 out(1, c_, h_, w_);
    const std::size_t n = static_cast<std::size_t>(c_) * h_ * w_;
    std::copy_n(data_.data() + n * b, n, out.data());
    return out;
  }

  void set_slice(int b, const Tensor4& item) {
    const std::size_t n = static_cast<std::size_t>(c_) * h_ * w_;
    if (item.size() != n) throw ShapeError("Tensor4::set_slice: item shape mismatch");
    std::copy_n(item.data(), n, data_.data() + n * b);
  }

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(b_, c_, h_, w_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out.data()[i] = static_cast<U>(data_[i]);
    }
    return out;
  }

 private:
  std::size_t idx(int b, int c, int y, int x) const {
    return ((static_cast<std::size_t>(b) * c_ + c) * h_ + y) * w_ + x;
  }

  int b_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

template <typename T>
std::string shape_string(const Tensor4<T>& t) {
  return "(" + std::to_string(t.batch()) + "," + std::to_string(t.channels()) +
         "," + std::to_string(t.height()) + "," + std::to_string(t.width()) + ")";
}

}  // namespace kieb
