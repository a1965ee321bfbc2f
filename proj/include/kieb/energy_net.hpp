#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kieb/energy_source.hpp"
#include "kieb/layers.hpp"
#include "kieb/tape.hpp"
#include "kieb/tensor.hpp"

namespace kieb {

// Architecture descriptor: a stem convolution, a chain of residual blocks
// (downsampling blocks use a strided 1x1 projection shortcut), global sum
// pooling and a dense layer producing the scalar energy.
struct NetSpec {
  struct Block {
    int width = 0;
    bool downsample = false;
  };

  int in_channels = 2;
  int stem_width = 64;
  std::vector<Block> blocks = {{64, false}, {128, true}, {128, false}, {256, true}};

  int downsample_count() const {
    int n = 0;
    for (const auto& b : blocks) n += b.downsample ? 1 : 0;
    return n;
  }
  int spatial_divisor() const { return 1 << downsample_count(); }

  // Reduced-width variant used by fast tests and the desk-scale harness.
  static NetSpec compact(int stem = 16) {
    NetSpec s;
    s.stem_width = stem;
    s.blocks = {{stem, false}, {2 * stem, true}, {2 * stem, false}, {4 * stem, true}};
    return s;
  }
};

struct ParamSection {
  std::string name;
  std::array<int, 4> shape;  // unused trailing dims are 1
  std::size_t offset = 0;
  std::size_t count = 0;
};

template <typename T>
inline void accumulate(Tensor4<T>& dst, const Tensor4<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

// Residual energy network E_theta(x). Parameters live in one flat vector with
// named sections; gradients w.r.t. parameters are accumulated into a
// tape-owned buffer of the same layout, so the model itself stays const
// during inference and is safe for concurrent read-only use.
template <typename T>
class EnergyNet final : public EnergySource<T> {
 public:
  explicit EnergyNet(NetSpec spec) : spec_(std::move(spec)) { build_layout(); }

  // Kernels are zero-mean with std 1/sqrt(fan-in); biases start at zero.
  // dense_scale scales the final layer; training starts it at zero so the
  // energy surface grows from a flat landscape instead of a hot random one.
  static EnergyNet random_init(const NetSpec& spec, std::uint64_t seed,
                               double dense_scale = 1.0) {
    EnergyNet net(spec);
    std::mt19937_64 rng(seed);
    for (const LayerRef& lr : net.layers_) {
      const std::size_t fan_in =
          static_cast<std::size_t>(lr.in_ch) * lr.kh * lr.kw;
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(fan_in)));
      T* k = net.params_.data() + lr.kernel_off;
      for (std::size_t i = 0; i < lr.kernel_count; ++i) k[i] = static_cast<T>(dist(rng));
    }
    {
      std::normal_distribution<double> dist(
          0.0, dense_scale / std::sqrt(double(net.pooled_channels())));
      T* w = net.params_.data() + net.dense_w_off_;
      for (int c = 0; c < net.pooled_channels(); ++c) {
        w[c] = dense_scale == 0.0 ? T(0) : static_cast<T>(dist(rng));
      }
    }
    return net;
  }

  const NetSpec& spec() const { return spec_; }
  int pooled_channels() const { return spec_.blocks.back().width; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  const std::vector<ParamSection>& sections() const { return sections_; }

  template <typename U>
  EnergyNet<U> cast() const {
    EnergyNet<U> out(spec_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.params()[i] = static_cast<U>(params_[i]);
    }
    return out;
  }

  // Straight-line evaluation without a tape.
  std::vector<T> energy(const Tensor4<T>& x) const override {
    check_input(x);
    Tensor4<T> h = conv2d(x, conv_weights(layers_[0]), 1);
    std::size_t li = 1;
    for (const auto& blk : spec_.blocks) {
      const ConvWeights<T> c1 = conv_weights(layers_[li]);
      const ConvWeights<T> c2 = conv_weights(layers_[li + 1]);
      li += 2;
      if (block_needs_projection(blk, h.channels())) {
        const ConvWeights<T> proj = conv_weights(layers_[li]);
        ++li;
        h = resblock(h, c1, c2, &proj, blk.downsample);
      } else {
        h = resblock<T>(h, c1, c2, nullptr, blk.downsample);
      }
    }
    Tensor4<T> pooled = global_sum_pool(swish(h));
    Tensor4<T> out =
        dense_to_scalar(pooled, params_.data() + dense_w_off_, params_[dense_b_off_]);
    std::vector<T> e(out.batch());
    for (int b = 0; b < out.batch(); ++b) e[b] = out(b, 0, 0, 0);
    return e;
  }

  Tensor4<T> input_gradient(const Tensor4<T>& x) const override {
    Tape<T> tape(false);
    const int xid = tape.push(x);
    const int out = forward_on_tape(tape, xid);
    tape.backward(out, std::vector<T>(x.batch(), T(1)));
    return tape.grad(xid);
  }

  // Flat parameter gradient of sum_b seed[b] * E(x_b).
  std::vector<T> param_gradient(const Tensor4<T>& x, const std::vector<T>& seed) const {
    Tape<T> tape(true);
    const int xid = tape.push(x);
    const int out = forward_on_tape(tape, xid);
    tape.param_grads(params_.size());
    tape.backward(out, seed);
    return std::move(tape.param_grads());
  }

  // Builds the graph on an existing tape; returns the (b,1,1,1) output node.
  int forward_on_tape(Tape<T>& tape, int xid) const {
    check_input(tape.value(xid));
    int h = tape_conv(tape, xid, layers_[0], 1);
    std::size_t li = 1;
    for (const auto& blk : spec_.blocks) {
      const int stride = blk.downsample ? 2 : 1;
      const int a1 = tape_swish(tape, h);
      const int c1 = tape_conv(tape, a1, layers_[li], stride);
      ++li;
      const int a2 = tape_swish(tape, c1);
      const int c2 = tape_conv(tape, a2, layers_[li], 1);
      ++li;
      int shortcut = h;
      if (block_needs_projection(blk, tape.value(h).channels())) {
        shortcut = tape_conv(tape, h, layers_[li], stride);
        ++li;
      }
      h = tape_add(tape, shortcut, c2);
    }
    const int act = tape_swish(tape, h);
    const int pooled = tape_pool(tape, act);
    return tape_dense(tape, pooled);
  }

 private:
  template <typename U>
  friend class EnergyNet;

  struct LayerRef {
    std::size_t kernel_off = 0, kernel_count = 0;
    std::size_t bias_off = 0;  // bias always present
    int out_ch = 0, in_ch = 0, kh = 0, kw = 0;
  };

  static bool block_needs_projection(const NetSpec::Block& blk, int in_ch) {
    return blk.downsample || blk.width != in_ch;
  }

  ConvWeights<T> conv_weights(const LayerRef& lr) const {
    return ConvWeights<T>{params_.data() + lr.kernel_off,
                          params_.data() + lr.bias_off,
                          lr.out_ch, lr.in_ch, lr.kh, lr.kw};
  }

  void check_input(const Tensor4<T>& x) const {
    if (x.channels() != spec_.in_channels) {
      throw ShapeError("energy network expects " + std::to_string(spec_.in_channels) +
                       " channels, got " + std::to_string(x.channels()));
    }
    const int d = spec_.spatial_divisor();
    if (x.height() % d != 0 || x.width() % d != 0) {
      throw ShapeError("energy network input " + shape_string(x) +
                       " not divisible by downsample factor " + std::to_string(d));
    }
  }

  void build_layout() {
    params_.clear();
    sections_.clear();
    layers_.clear();
    auto add_conv = [&](const std::string& name, int out_ch, int in_ch, int k) {
      LayerRef lr;
      lr.out_ch = out_ch;
      lr.in_ch = in_ch;
      lr.kh = k;
      lr.kw = k;
      lr.kernel_off = alloc(name + ".kernel", {out_ch, in_ch, k, k});
      lr.kernel_count = static_cast<std::size_t>(out_ch) * in_ch * k * k;
      lr.bias_off = alloc(name + ".bias", {out_ch, 1, 1, 1});
      layers_.push_back(lr);
    };
    add_conv("stem", spec_.stem_width, spec_.in_channels, 3);
    int ch = spec_.stem_width;
    for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
      const auto& blk = spec_.blocks[i];
      const std::string base = "block" + std::to_string(i);
      add_conv(base + ".conv1", blk.width, ch, 3);
      add_conv(base + ".conv2", blk.width, blk.width, 3);
      if (block_needs_projection(blk, ch)) {
        add_conv(base + ".proj", blk.width, ch, 1);
      }
      ch = blk.width;
    }
    dense_w_off_ = alloc("dense.weight", {ch, 1, 1, 1});
    dense_b_off_ = alloc("dense.bias", {1, 1, 1, 1});
  }

  std::size_t alloc(const std::string& name, std::array<int, 4> shape) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    const std::size_t off = params_.size();
    params_.resize(off + count, T(0));
    sections_.push_back(ParamSection{name, shape, off, count});
    return off;
  }

  int tape_conv(Tape<T>& tape, int xid, const LayerRef& lr, int stride) const {
    const Tensor4<T>& x = tape.value(xid);
    const int in_h = x.height(), in_w = x.width();
    const int yid = tape.push(conv2d(x, conv_weights(lr), stride));
    const std::size_t n_params = params_.size();
    tape.record([this, xid, yid, lr, stride, in_h, in_w, n_params](Tape<T>& tp) {
      const Tensor4<T>& gy = tp.grad(yid);
      const ConvWeights<T> w = conv_weights(lr);
      Tensor4<T> gx = conv2d_backward_input(gy, w, stride, in_h, in_w);
      accumulate(tp.grad(xid), gx);
      if (tp.track_params()) {
        std::vector<T>& pg = tp.param_grads(n_params);
        conv2d_backward_params(gy, tp.value(xid), w, stride,
                               pg.data() + lr.kernel_off, pg.data() + lr.bias_off);
      }
    });
    return yid;
  }

  int tape_swish(Tape<T>& tape, int xid) const {
    const int yid = tape.push(swish(tape.value(xid)));
    tape.record([xid, yid](Tape<T>& tp) {
      Tensor4<T> gx = swish_backward(tp.value(xid), tp.grad(yid));
      accumulate(tp.grad(xid), gx);
    });
    return yid;
  }

  int tape_add(Tape<T>& tape, int aid, int bid) const {
    const int yid = tape.push(add(tape.value(aid), tape.value(bid)));
    tape.record([aid, bid, yid](Tape<T>& tp) {
      const Tensor4<T>& gy = tp.grad(yid);
      accumulate(tp.grad(aid), gy);
      accumulate(tp.grad(bid), gy);
    });
    return yid;
  }

  int tape_pool(Tape<T>& tape, int xid) const {
    const Tensor4<T>& x = tape.value(xid);
    const int in_h = x.height(), in_w = x.width();
    const int yid = tape.push(global_sum_pool(x));
    tape.record([xid, yid, in_h, in_w](Tape<T>& tp) {
      Tensor4<T> gx = global_sum_pool_backward(tp.grad(yid), in_h, in_w);
      accumulate(tp.grad(xid), gx);
    });
    return yid;
  }

  int tape_dense(Tape<T>& tape, int xid) const {
    const Tensor4<T>& x = tape.value(xid);
    const int yid = tape.push(
        dense_to_scalar(x, params_.data() + dense_w_off_, params_[dense_b_off_]));
    const std::size_t n_params = params_.size();
    const std::size_t w_off = dense_w_off_, b_off = dense_b_off_;
    const T* w = params_.data() + dense_w_off_;
    tape.record([xid, yid, w, w_off, b_off, n_params](Tape<T>& tp) {
      const Tensor4<T>& gy = tp.grad(yid);
      const Tensor4<T>& x = tp.value(xid);
      Tensor4<T> gx(x.batch(), x.channels(), 1, 1);
      for (int b = 0; b < x.batch(); ++b) {
        const T g = gy(b, 0, 0, 0);
        for (int c = 0; c < x.channels(); ++c) gx(b, c, 0, 0) = g * w[c];
      }
      accumulate(tp.grad(xid), gx);
      if (tp.track_params()) {
        std::vector<T>& pg = tp.param_grads(n_params);
        for (int b = 0; b < x.batch(); ++b) {
          const T g = gy(b, 0, 0, 0);
          for (int c = 0; c < x.channels(); ++c) pg[w_off + c] += g * x(b, c, 0, 0);
          pg[b_off] += g;
        }
      }
    });
    return yid;
  }

  NetSpec spec_;
  std::vector<T> params_;
  std::vector<ParamSection> sections_;
  std::vector<LayerRef> layers_;
  std::size_t dense_w_off_ = 0;
  std::size_t dense_b_off_ = 0;
};

// Which data domain a model was trained on. A model is only ever applied to
// data from its own domain; the solvers enforce the tag.
enum class Domain { image, weighted_kspace };

inline const char* domain_name(Domain d) {
  return d == Domain::image ? "image" : "weighted-kspace";
}

template <typename T>
struct EnergyModel {
  EnergyNet<T> net;
  Domain domain;
};

}  // namespace kieb
