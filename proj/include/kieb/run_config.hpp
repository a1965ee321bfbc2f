#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "kieb/energy_net.hpp"
#include "kieb/recon.hpp"
#include "kieb/train.hpp"

namespace kieb {

struct TrainSettings {
  int epochs = 1;
  int steps = 0;  // > 0 overrides epochs
  int batch = 8;
  double lr = 0.0;  // 0 = per-domain default (3e-4 image, 5e-4 weighted k-space)
  std::size_t buffer_capacity = 10000;
  double buffer_fraction = 0.95;
  double data_noise_base = kSampleRange / 256.0;
  double energy_l2 = 0.1;
  std::string precision = "real32";
  LangevinConfig langevin{.step = 8.0, .steps = 60, .noise_scale = 7e-3,
                          .grad_clip = 1e-2, .anneal = 1.0};
};

struct PathSettings {
  std::string data, out, meas, mask, truth, sens, ckpt_image, ckpt_kspace;
};

// Strictly parsed JSON document mirroring the reconstruction and training
// settings. Unknown keys are rejected with the offending key named.
struct RunConfig {
  ReconConfig recon;
  NetSpec net;
  TrainSettings train;
  PathSettings paths;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

double default_lr(Domain domain);

}  // namespace kieb
