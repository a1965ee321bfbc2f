#include "kieb/run_config.hpp"

#include "kieb/checkpoint.hpp"
#include "kieb/errors.hpp"
#include "kieb/tensor_file.hpp"

namespace kieb {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& prefix, const std::string& key) {
  throw ConfigError("unknown config key: " + (prefix.empty() ? key : prefix + "." + key));
}

template <typename T>
T expect(const json& v, const std::string& path) {
  try {
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key " + path + " has the wrong type");
  }
}

void parse_langevin(const json& j, const std::string& prefix, LangevinConfig& lc) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = prefix + "." + key;
    if (key == "step") {
      lc.step = expect<double>(value, path);
    } else if (key == "steps") {
      lc.steps = expect<int>(value, path);
    } else if (key == "noise_scale") {
      lc.noise_scale = expect<double>(value, path);
    } else if (key == "grad_clip") {
      lc.grad_clip = expect<double>(value, path);
    } else if (key == "anneal") {
      lc.anneal = expect<double>(value, path);
    } else {
      bad_key(prefix, key);
    }
  }
}

void parse_weight(const json& j, WeightParams& w) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = "weight." + key;
    if (key == "r") {
      w.r = expect<double>(value, path);
    } else if (key == "p") {
      w.p = expect<double>(value, path);
    } else if (key == "floor_frac") {
      w.floor_frac = expect<double>(value, path);
    } else {
      bad_key("weight", key);
    }
  }
}

void parse_train(const json& j, TrainSettings& t) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = "train." + key;
    if (key == "epochs") {
      t.epochs = expect<int>(value, path);
    } else if (key == "steps") {
      t.steps = expect<int>(value, path);
    } else if (key == "batch") {
      t.batch = expect<int>(value, path);
    } else if (key == "lr") {
      t.lr = expect<double>(value, path);
    } else if (key == "buffer_capacity") {
      t.buffer_capacity = expect<std::size_t>(value, path);
    } else if (key == "buffer_fraction") {
      t.buffer_fraction = expect<double>(value, path);
    } else if (key == "data_noise_base") {
      t.data_noise_base = expect<double>(value, path);
    } else if (key == "energy_l2") {
      t.energy_l2 = expect<double>(value, path);
    } else if (key == "precision") {
      t.precision = expect<std::string>(value, path);
      if (t.precision != "real32" && t.precision != "real64") {
        throw ConfigError("train.precision must be real32 or real64");
      }
    } else if (key == "langevin") {
      parse_langevin(value, "train.langevin", t.langevin);
    } else {
      bad_key("train", key);
    }
  }
}

void parse_paths(const json& j, PathSettings& p) {
  for (const auto& [key, value] : j.items()) {
    const std::string path = "paths." + key;
    if (key == "data") {
      p.data = expect<std::string>(value, path);
    } else if (key == "out") {
      p.out = expect<std::string>(value, path);
    } else if (key == "meas") {
      p.meas = expect<std::string>(value, path);
    } else if (key == "mask") {
      p.mask = expect<std::string>(value, path);
    } else if (key == "truth") {
      p.truth = expect<std::string>(value, path);
    } else if (key == "sens") {
      p.sens = expect<std::string>(value, path);
    } else if (key == "ckpt_image") {
      p.ckpt_image = expect<std::string>(value, path);
    } else if (key == "ckpt_kspace") {
      p.ckpt_kspace = expect<std::string>(value, path);
    } else {
      bad_key("paths", key);
    }
  }
}

}  // namespace

double default_lr(Domain domain) {
  return domain == Domain::image ? 3e-4 : 5e-4;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  RunConfig cfg;
  cfg.recon.langevin = LangevinConfig{.step = 2.0, .steps = 5, .noise_scale = 7e-3,
                                      .grad_clip = 1e-2, .anneal = 0.95};
  for (const auto& [key, value] : j.items()) {
    if (key == "method") {
      cfg.recon.method = method_from_string(expect<std::string>(value, key));
    } else if (key == "lambda_i") {
      cfg.recon.lambda_i = expect<double>(value, key);
    } else if (key == "lambda_k") {
      cfg.recon.lambda_k = expect<double>(value, key);
    } else if (key == "outer_iters") {
      cfg.recon.outer_iters = expect<int>(value, key);
    } else if (key == "stage2_iters") {
      cfg.recon.stage2_iters = expect<int>(value, key);
    } else if (key == "calibration") {
      const std::string c = expect<std::string>(value, key);
      if (c == "sos-calibration-free") {
        cfg.recon.calibration = Calibration::sos_calibration_free;
      } else if (c == "sensitivity-known") {
        cfg.recon.calibration = Calibration::sensitivity_known;
      } else {
        throw ConfigError("calibration must be sos-calibration-free or sensitivity-known");
      }
    } else if (key == "seed") {
      cfg.recon.seed = expect<std::uint64_t>(value, key);
    } else if (key == "langevin") {
      parse_langevin(value, "langevin", cfg.recon.langevin);
    } else if (key == "weight") {
      parse_weight(value, cfg.recon.weight);
    } else if (key == "net") {
      cfg.net = net_spec_from_json(value);
    } else if (key == "train") {
      parse_train(value, cfg.train);
    } else if (key == "paths") {
      parse_paths(value, cfg.paths);
    } else {
      bad_key("", key);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = read_file(path);
  return parse_run_config(
      std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace kieb
