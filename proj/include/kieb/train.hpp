#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "kieb/adam.hpp"
#include "kieb/energy_net.hpp"
#include "kieb/langevin.hpp"
#include "kieb/replay_buffer.hpp"

namespace kieb {

// Samples are two-channel tensors normalized to unit maximum magnitude, so
// channel values live in [-1, 1] and the dynamic range is 2.
inline constexpr double kSampleRange = 2.0;

struct TrainConfig {
  int epochs = 1;
  int steps_override = 0;  // > 0 runs exactly this many steps instead
  int batch = 8;
  double lr = 3e-4;
  LangevinConfig langevin;
  std::size_t buffer_capacity = 10000;
  double buffer_fraction = 0.95;
  // Positive samples are perturbed by uniform noise with amplitude drawn
  // per batch from {0, 1, 2, 4}/256 of the dynamic range.
  double data_noise_base = kSampleRange / 256.0;
  double energy_l2 = 0.1;  // energy-magnitude penalty against drift
  std::uint64_t seed = 0;

  int steps_for(std::size_t dataset_size) const {
    if (steps_override > 0) return steps_override;
    const int per_epoch =
        static_cast<int>((dataset_size + batch - 1) / static_cast<std::size_t>(batch));
    return epochs * per_epoch;
  }
};

struct StepStats {
  double loss = 0.0;
  double energy_pos = 0.0;
  double energy_neg = 0.0;
};

// Fresh negative: from the replay buffer with probability buffer_fraction
// (when the buffer has content), otherwise uniform noise over [-1, 1].
// Returns the sample and whether it came from the buffer.
template <typename T>
std::pair<Tensor4<T>, bool> negative_init(ReplayBuffer<T>& buffer, int channels,
                                          int h, int w, double buffer_fraction,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool from_buffer = !buffer.empty() && unit(rng) < buffer_fraction;
  if (from_buffer) {
    return {buffer.sample(), true};
  }
  Tensor4<T> t(1, channels, h, w);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(u(rng));
  return {std::move(t), false};
}

// One forward pass shared between the energy readout and the parameter
// gradient: seeds are computed from the energies before backprop.
template <typename T, typename SeedFn>
std::pair<std::vector<T>, std::vector<T>> energy_and_param_grad(
    const EnergyNet<T>& net, const Tensor4<T>& x, SeedFn&& seed_fn) {
  Tape<T> tape(true);
  const int xid = tape.push(x);
  const int out = net.forward_on_tape(tape, xid);
  std::vector<T> energies(x.batch());
  for (int b = 0; b < x.batch(); ++b) energies[b] = tape.value(out)(b, 0, 0, 0);
  tape.param_grads(net.param_count());
  tape.backward(out, seed_fn(energies));
  return {std::move(tape.param_grads()), std::move(energies)};
}

// Contrastive maximum-likelihood gradient:
//   mean over positives of dE/dtheta  minus  mean over negatives of dE/dtheta.
// Works against anything exposing param_gradient(x, seeds); tests use small
// analytic energies here.
template <typename T, typename Net>
std::vector<T> ml_gradient_net(const Net& net, const Tensor4<T>& positive,
                               const Tensor4<T>& negative) {
  if (positive.batch() < 1 || negative.batch() < 1) {
    throw ParamError("ml_gradient: empty batch");
  }
  if (positive.channels() != negative.channels() ||
      positive.height() != negative.height() ||
      positive.width() != negative.width()) {
    throw ShapeError("ml_gradient: positive/negative sample shape mismatch");
  }
  Tensor4<T> joint(positive.batch() + negative.batch(), positive.channels(),
                   positive.height(), positive.width());
  for (int b = 0; b < positive.batch(); ++b) joint.set_slice(b, positive.slice(b));
  for (int b = 0; b < negative.batch(); ++b) {
    joint.set_slice(positive.batch() + b, negative.slice(b));
  }
  const T wp = T(1) / static_cast<T>(positive.batch());
  const T wn = T(-1) / static_cast<T>(negative.batch());
  std::vector<T> seeds(joint.batch());
  for (int b = 0; b < joint.batch(); ++b) seeds[b] = b < positive.batch() ? wp : wn;
  return net.param_gradient(joint, seeds);
}

template <typename T>
std::vector<T> ml_gradient(const EnergyModel<T>& model, const Tensor4<T>& positive,
                           const Tensor4<T>& negative) {
  return ml_gradient_net(model.net, positive, negative);
}

// Maximum-likelihood training with a replay buffer. Positives are dataset
// samples under small uniform perturbations; negatives are buffer/noise
// initializations refined by Langevin sampling and written back to the
// buffer. Returns the per-step loss trace.
template <typename T>
std::vector<StepStats> train(EnergyModel<T>& model,
                             const std::vector<Tensor4<T>>& dataset,
                             ReplayBuffer<T>& buffer, const TrainConfig& cfg,
                             AdamState<T>& adam) {
  if (dataset.empty()) throw ParamError("train: empty dataset");
  cfg.langevin.validate();
  const int c = dataset.front().channels();
  const int h = dataset.front().height();
  const int w = dataset.front().width();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  std::uniform_int_distribution<int> amp_pick(0, 3);
  const double amps[4] = {0.0, cfg.data_noise_base, 2.0 * cfg.data_noise_base,
                          4.0 * cfg.data_noise_base};

  const int steps = cfg.steps_for(dataset.size());
  std::vector<StepStats> trace;
  trace.reserve(steps);

  for (int step = 0; step < steps; ++step) {
    Tensor4<T> pos(cfg.batch, c, h, w);
    const double amp = amps[amp_pick(rng)];
    std::uniform_real_distribution<double> jitter(-amp, amp);
    for (int b = 0; b < cfg.batch; ++b) {
      pos.set_slice(b, dataset[pick(rng)]);
    }
    if (amp > 0.0) {
      T* p = pos.data();
      for (std::size_t i = 0; i < pos.size(); ++i) p[i] += static_cast<T>(jitter(rng));
    }

    Tensor4<T> neg(cfg.batch, c, h, w);
    for (int b = 0; b < cfg.batch; ++b) {
      neg.set_slice(b, negative_init(buffer, c, h, w, cfg.buffer_fraction, rng).first);
    }
    neg = langevin_sample(model.net, std::move(neg), cfg.langevin, rng);
    for (int b = 0; b < cfg.batch; ++b) buffer.push(neg.slice(b));

    Tensor4<T> joint(2 * cfg.batch, c, h, w);
    for (int b = 0; b < cfg.batch; ++b) joint.set_slice(b, pos.slice(b));
    for (int b = 0; b < cfg.batch; ++b) joint.set_slice(cfg.batch + b, neg.slice(b));

    const T inv_b = T(1) / static_cast<T>(cfg.batch);
    const T l2 = static_cast<T>(cfg.energy_l2);
    auto seeds = [&](const std::vector<T>& energies) {
      std::vector<T> s(energies.size());
      for (std::size_t i = 0; i < energies.size(); ++i) {
        const T sign = i < static_cast<std::size_t>(cfg.batch) ? T(1) : T(-1);
        s[i] = (sign + T(2) * l2 * energies[i]) * inv_b;
      }
      return s;
    };
    auto [grad, energies] = energy_and_param_grad(model.net, joint, seeds);
    adam_update(adam, model.net.params(), grad);

    StepStats st;
    double pos_sq = 0.0, neg_sq = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      st.energy_pos += energies[b];
      st.energy_neg += energies[cfg.batch + b];
      pos_sq += double(energies[b]) * energies[b];
      neg_sq += double(energies[cfg.batch + b]) * energies[cfg.batch + b];
    }
    st.energy_pos /= cfg.batch;
    st.energy_neg /= cfg.batch;
    st.loss = st.energy_pos - st.energy_neg +
              cfg.energy_l2 * (pos_sq + neg_sq) / cfg.batch;
    if (!std::isfinite(st.loss)) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }
    trace.push_back(st);
  }
  return trace;
}

}  // namespace kieb
