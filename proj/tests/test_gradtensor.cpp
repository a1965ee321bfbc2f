#include <doctest.h>

#include <random>

#include "kieb/energy_net.hpp"
#include "kieb/layers.hpp"
#include "kieb/tape.hpp"
#include "kieb/tensor.hpp"
#include "test_util.hpp"

using namespace kieb;
using test::central_diff;
using test::random_tensor;
using test::random_vector;
using test::rel_err;

namespace {

// Scalar functional of a tensor: fixed random projection. Differentiating it
// exercises the backward kernels with a dense upstream gradient.
double project(const Tensor4<double>& t, const std::vector<double>& r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += r[i] * t.data()[i];
  return acc;
}

Tensor4<double> projection_as_grad(const std::vector<double>& r, int b, int c, int h,
                                   int w) {
  return Tensor4<double>::from_data(b, c, h, w, r);
}

}  // namespace

TEST_SUITE_BEGIN("gradtensor");

TEST_CASE("tensor shape and finiteness invariants") {
  CHECK_THROWS_AS(Tensor4<double>::from_data(1, 1, 2, 2, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(
      Tensor4<double>::from_data(1, 1, 1, 2, {1.0, std::nan("")}), NumericError);
  Tensor4<double> t = random_tensor<double>(2, 3, 4, 5, 99);
  CHECK(t.size() == 2u * 3u * 4u * 5u);
  CHECK(t.all_finite());
}

TEST_CASE("conv2d centered delta kernel is the identity") {
  Tensor4<double> x = random_tensor<double>(1, 1, 3, 3, 1);
  std::vector<double> kernel(9, 0.0);
  kernel[4] = 1.0;  // center of the 3x3 kernel
  ConvWeights<double> w{kernel.data(), nullptr, 1, 1, 3, 3};
  Tensor4<double> y = conv2d(x, w, 1);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("conv2d all-ones kernel sums the 3x3 neighborhood") {
  const double c = 0.7;
  Tensor4<double> x(1, 1, 5, 5, c);
  std::vector<double> kernel(9, 1.0);
  ConvWeights<double> w{kernel.data(), nullptr, 1, 1, 3, 3};
  Tensor4<double> y = conv2d(x, w, 1);
  // Interior pixels see the full neighborhood; corners only 2x2.
  CHECK(y(0, 0, 2, 2) == doctest::Approx(9.0 * c).epsilon(1e-14));
  CHECK(y(0, 0, 1, 3) == doctest::Approx(9.0 * c).epsilon(1e-14));
  CHECK(y(0, 0, 0, 0) == doctest::Approx(4.0 * c).epsilon(1e-14));
}

TEST_CASE("conv2d rejects channel mismatch and bad stride") {
  Tensor4<double> x = random_tensor<double>(1, 3, 4, 4, 2);
  std::vector<double> kernel(2 * 2 * 9, 0.1);
  ConvWeights<double> w{kernel.data(), nullptr, 2, 2, 3, 3};
  CHECK_THROWS_AS(conv2d(x, w, 1), ShapeError);
  Tensor4<double> x2 = random_tensor<double>(1, 2, 4, 4, 3);
  CHECK_THROWS_AS(conv2d(x2, w, 3), ParamError);
}

TEST_CASE("conv2d gradients match central finite differences") {
  const double h = 1e-5;
  for (int stride : {1, 2}) {
    CAPTURE(stride);
    Tensor4<double> x = random_tensor<double>(2, 2, 5, 4, 10 + stride);
    std::vector<double> kernel = random_vector(3 * 2 * 3 * 3, 20 + stride);
    std::vector<double> bias = random_vector(3, 30 + stride);
    ConvWeights<double> w{kernel.data(), bias.data(), 3, 2, 3, 3};

    Tensor4<double> y = conv2d(x, w, stride);
    std::vector<double> r = random_vector(y.size(), 40 + stride);
    auto loss = [&]() { return project(conv2d(x, w, stride), r); };

    Tensor4<double> gy =
        projection_as_grad(r, y.batch(), y.channels(), y.height(), y.width());
    Tensor4<double> gx = conv2d_backward_input(gy, w, stride, x.height(), x.width());
    std::vector<double> gk(kernel.size(), 0.0), gb(bias.size(), 0.0);
    conv2d_backward_params(gy, x, w, stride, gk.data(), gb.data());

    for (std::size_t i = 0; i < x.size(); i += 7) {
      const double fd = central_diff(x.data()[i], h, loss);
      CHECK(rel_err(gx.data()[i], fd) < 1e-6);
    }
    for (std::size_t i = 0; i < kernel.size(); i += 5) {
      const double fd = central_diff(kernel[i], h, loss);
      CHECK(rel_err(gk[i], fd) < 1e-6);
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
      const double fd = central_diff(bias[i], h, loss);
      CHECK(rel_err(gb[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("conv2d is linear in its input") {
  Tensor4<double> x = random_tensor<double>(1, 2, 6, 6, 50);
  Tensor4<double> y = random_tensor<double>(1, 2, 6, 6, 51);
  std::vector<double> kernel = random_vector(3 * 2 * 9, 52);
  ConvWeights<double> w{kernel.data(), nullptr, 3, 2, 3, 3};
  const double a = 1.7, b = -0.3;

  Tensor4<double> mix(1, 2, 6, 6);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix.data()[i] = a * x.data()[i] + b * y.data()[i];
  }
  Tensor4<double> lhs = conv2d(mix, w, 1);
  Tensor4<double> cx = conv2d(x, w, 1);
  Tensor4<double> cy = conv2d(y, w, 1);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    CHECK(rel_err(lhs.data()[i], a * cx.data()[i] + b * cy.data()[i], 1e-9) < 1e-12);
  }
}

TEST_CASE("swish fixed points and asymptote") {
  Tensor4<double> x = Tensor4<double>::from_data(1, 1, 1, 4, {0.0, 20.0, 1.0, -1.0});
  Tensor4<double> y = swish(x);
  CHECK(y(0, 0, 0, 0) == 0.0);
  CHECK(y(0, 0, 0, 1) == doctest::Approx(20.0).epsilon(1e-8));
  CHECK(y(0, 0, 0, 2) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(y(0, 0, 0, 3) == doctest::Approx(-0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("swish gradient matches finite differences") {
  Tensor4<double> x = random_tensor<double>(1, 1, 3, 4, 60, -3.0, 3.0);
  std::vector<double> r = random_vector(x.size(), 61);
  auto loss = [&]() { return project(swish(x), r); };
  Tensor4<double> gy = projection_as_grad(r, 1, 1, 3, 4);
  Tensor4<double> gx = swish_backward(x, gy);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = central_diff(x.data()[i], 1e-5, loss);
    CHECK(rel_err(gx.data()[i], fd) < 1e-6);
  }
}

TEST_CASE("resblock with zero conv path is the identity") {
  Tensor4<double> x = random_tensor<double>(1, 4, 6, 6, 70);
  std::vector<double> k1(4 * 4 * 9, 0.0), k2(4 * 4 * 9, 0.0), b(4, 0.0);
  ConvWeights<double> c1{k1.data(), b.data(), 4, 4, 3, 3};
  ConvWeights<double> c2{k2.data(), b.data(), 4, 4, 3, 3};
  Tensor4<double> y = resblock<double>(x, c1, c2, nullptr, false);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("downsampling resblock halves spatial dims and doubles channels") {
  Tensor4<double> x = random_tensor<double>(1, 4, 8, 8, 71);
  std::vector<double> k1 = random_vector(8 * 4 * 9, 72);
  std::vector<double> k2 = random_vector(8 * 8 * 9, 73);
  std::vector<double> kp = random_vector(8 * 4, 74);
  std::vector<double> b8(8, 0.0);
  ConvWeights<double> c1{k1.data(), b8.data(), 8, 4, 3, 3};
  ConvWeights<double> c2{k2.data(), b8.data(), 8, 8, 3, 3};
  ConvWeights<double> proj{kp.data(), b8.data(), 8, 4, 1, 1};
  Tensor4<double> y = resblock(x, c1, c2, &proj, true);
  CHECK(y.channels() == 8);
  CHECK(y.height() == 4);
  CHECK(y.width() == 4);
}

TEST_CASE("resblock without projection rejects channel change") {
  Tensor4<double> x = random_tensor<double>(1, 4, 6, 6, 75);
  std::vector<double> k1 = random_vector(8 * 4 * 9, 76);
  std::vector<double> k2 = random_vector(8 * 8 * 9, 77);
  std::vector<double> b8(8, 0.0);
  ConvWeights<double> c1{k1.data(), b8.data(), 8, 4, 3, 3};
  ConvWeights<double> c2{k2.data(), b8.data(), 8, 8, 3, 3};
  CHECK_THROWS_AS(resblock<double>(x, c1, c2, nullptr, false), ShapeError);
}

TEST_CASE("resblock gradient matches finite differences through the network") {
  NetSpec spec;
  spec.stem_width = 4;
  spec.blocks = {{6, true}};
  EnergyNet<double> net = EnergyNet<double>::random_init(spec, 80);
  Tensor4<double> x = random_tensor<double>(1, 2, 6, 6, 81);
  Tensor4<double> g = net.input_gradient(x);
  auto loss = [&]() { return net.energy(x)[0]; };
  for (std::size_t i = 0; i < x.size(); i += 3) {
    const double fd = central_diff(x.data()[i], 1e-5, loss);
    CHECK(rel_err(g.data()[i], fd) < 1e-6);
  }
}

TEST_CASE("global sum pool counts, zeros, and scales") {
  Tensor4<double> ones(1, 1, 4, 4, 1.0);
  CHECK(global_sum_pool(ones)(0, 0, 0, 0) == 16.0);

  Tensor4<double> zeros(2, 3, 5, 5, 0.0);
  Tensor4<double> pz = global_sum_pool(zeros);
  for (std::size_t i = 0; i < pz.size(); ++i) CHECK(pz.data()[i] == 0.0);

  Tensor4<double> x = random_tensor<double>(2, 3, 4, 4, 90);
  const double a = 2.5;
  Tensor4<double> ax = x;
  for (std::size_t i = 0; i < ax.size(); ++i) ax.data()[i] *= a;
  Tensor4<double> p1 = global_sum_pool(x);
  Tensor4<double> p2 = global_sum_pool(ax);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(rel_err(p2.data()[i], a * p1.data()[i], 1e-9) < 1e-12);
  }
}

TEST_CASE("pool and dense gradients match finite differences") {
  Tensor4<double> x = random_tensor<double>(2, 3, 4, 4, 91);
  std::vector<double> dw = random_vector(3, 92);
  double db = 0.4;
  std::vector<double> r = random_vector(2, 93);
  auto loss = [&]() {
    Tensor4<double> out = dense_to_scalar(global_sum_pool(x), dw.data(), db);
    double acc = 0.0;
    for (int b = 0; b < 2; ++b) acc += r[b] * out(b, 0, 0, 0);
    return acc;
  };
  // Backward by hand through the two layers.
  Tensor4<double> gpool(2, 3, 1, 1);
  for (int b = 0; b < 2; ++b) {
    for (int c = 0; c < 3; ++c) gpool(b, c, 0, 0) = r[b] * dw[c];
  }
  Tensor4<double> gx = global_sum_pool_backward(gpool, 4, 4);
  for (std::size_t i = 0; i < x.size(); i += 5) {
    const double fd = central_diff(x.data()[i], 1e-5, loss);
    CHECK(rel_err(gx.data()[i], fd) < 1e-6);
  }
  for (std::size_t i = 0; i < dw.size(); ++i) {
    const double fd = central_diff(dw[i], 1e-5, loss);
    Tensor4<double> pooled = global_sum_pool(x);
    double expect = 0.0;
    for (int b = 0; b < 2; ++b) expect += r[b] * pooled(b, static_cast<int>(i), 0, 0);
    CHECK(rel_err(expect, fd) < 1e-6);
  }
}

TEST_CASE("zero-parameter energy network outputs zero for any input") {
  EnergyNet<double> net{NetSpec::compact(8)};
  Tensor4<double> x = random_tensor<double>(3, 2, 8, 8, 100);
  for (double e : net.energy(x)) CHECK(e == 0.0);
  Tensor4<double> g = net.input_gradient(x);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 0.0);
}

TEST_CASE("energy forward is deterministic and pure") {
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec::compact(8), 101);
  Tensor4<double> x = random_tensor<double>(2, 2, 8, 8, 102);
  const std::vector<double> params_before = net.params();
  const std::vector<double> x_before = x.vec();

  std::vector<double> e1 = net.energy(x);
  std::vector<double> e2 = net.energy(x);
  Tensor4<double> g1 = net.input_gradient(x);
  Tensor4<double> g2 = net.input_gradient(x);
  for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == e2[i]);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1.data()[i] == g2.data()[i]);
  CHECK(net.params() == params_before);
  CHECK(x.vec() == x_before);
}

TEST_CASE("tape evaluation agrees with the straight-line evaluation") {
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec::compact(8), 103);
  Tensor4<double> x = random_tensor<double>(2, 2, 8, 8, 104);
  std::vector<double> direct = net.energy(x);
  Tape<double> tape(false);
  const int xid = tape.push(x);
  const int out = net.forward_on_tape(tape, xid);
  for (int b = 0; b < 2; ++b) {
    CHECK(rel_err(tape.value(out)(b, 0, 0, 0), direct[b], 1e-9) < 1e-12);
  }
}

TEST_CASE("a tape refuses a second backward pass") {
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec::compact(4), 105);
  Tensor4<double> x = random_tensor<double>(1, 2, 4, 4, 106);
  Tape<double> tape(false);
  const int xid = tape.push(x);
  const int out = net.forward_on_tape(tape, xid);
  tape.backward(out, {1.0});
  CHECK_THROWS_AS(tape.backward(out, {1.0}), ParamError);
}

TEST_CASE("input gradient matches finite differences on the full architecture") {
  // Default Fig-style instantiation (stem 64, widths 64/128/128/256) at 8x8.
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec{}, 107);
  Tensor4<double> x = random_tensor<double>(1, 2, 8, 8, 108);
  Tensor4<double> g = net.input_gradient(x);
  auto loss = [&]() { return net.energy(x)[0]; };
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t i = pick(rng);
    const double fd = central_diff(x.data()[i], 1e-5, loss);
    CHECK(rel_err(g.data()[i], fd) < 1e-5);
  }
}

TEST_CASE("doubling the dense layer doubles the input gradient exactly") {
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec::compact(8), 110);
  EnergyNet<double> doubled = net;
  for (const ParamSection& s : doubled.sections()) {
    if (s.name == "dense.weight" || s.name == "dense.bias") {
      for (std::size_t i = 0; i < s.count; ++i) doubled.params()[s.offset + i] *= 2.0;
    }
  }
  Tensor4<double> x = random_tensor<double>(1, 2, 8, 8, 111);
  Tensor4<double> g1 = net.input_gradient(x);
  Tensor4<double> g2 = doubled.input_gradient(x);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g2.data()[i] == 2.0 * g1.data()[i]);
  }
}

TEST_CASE("identical samples in positive and negative roles cancel exactly") {
  EnergyNet<double> net = EnergyNet<double>::random_init(NetSpec::compact(8), 112);
  Tensor4<double> one = random_tensor<double>(1, 2, 8, 8, 113);
  Tensor4<double> batch(2, 2, 8, 8);
  batch.set_slice(0, one);
  batch.set_slice(1, one);
  std::vector<double> g = net.param_gradient(batch, {1.0, -1.0});
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("parameter gradient matches finite differences") {
  NetSpec spec;
  spec.stem_width = 6;
  spec.blocks = {{6, false}, {12, true}};
  EnergyNet<double> net = EnergyNet<double>::random_init(spec, 114);
  Tensor4<double> x = random_tensor<double>(2, 2, 8, 8, 115);
  std::vector<double> g = net.param_gradient(x, {1.0, 1.0});
  auto loss = [&]() {
    std::vector<double> e = net.energy(x);
    return e[0] + e[1];
  };
  std::mt19937_64 rng(116);
  std::uniform_int_distribution<std::size_t> pick(0, net.param_count() - 1);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t i = pick(rng);
    const double fd = central_diff(net.params()[i], 1e-5, loss);
    CHECK(rel_err(g[i], fd) < 1e-5);
  }
}

TEST_CASE("dense gradient equals the pooled feature vector under identity upstream") {
  NetSpec spec;
  spec.in_channels = 2;
  spec.stem_width = 2;
  spec.blocks = {{2, false}};
  EnergyNet<double> net{spec};
  // Stem becomes the per-channel identity; the block conv path stays zero.
  for (const ParamSection& s : net.sections()) {
    if (s.name == "stem.kernel") {
      for (int oc = 0; oc < 2; ++oc) {
        net.params()[s.offset + (oc * 2 + oc) * 9 + 4] = 1.0;
      }
    }
  }
  Tensor4<double> x = random_tensor<double>(1, 2, 6, 6, 117);
  std::vector<double> g = net.param_gradient(x, {1.0});
  Tensor4<double> pooled = global_sum_pool(swish(x));
  for (const ParamSection& s : net.sections()) {
    if (s.name == "dense.weight") {
      for (int c = 0; c < 2; ++c) {
        CHECK(rel_err(g[s.offset + c], pooled(0, c, 0, 0), 1e-9) < 1e-10);
      }
    }
    if (s.name == "dense.bias") CHECK(g[s.offset] == 1.0);
  }
}

TEST_CASE("energy network rejects bad input shapes") {
  EnergyNet<double> net{NetSpec{}};  // divisor 4
  CHECK_THROWS_AS(net.energy(Tensor4<double>(1, 2, 6, 6)), ShapeError);
  CHECK_THROWS_AS(net.energy(Tensor4<double>(1, 3, 8, 8)), ShapeError);
}

TEST_SUITE_END();
