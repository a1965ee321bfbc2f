// kieb - energy-model based parallel-MRI reconstruction in the k-space and
// image domains. Subcommands cover the synthetic-data harness, mask and
// weight generation, model training, the four solvers, and evaluation.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kieb/checkpoint.hpp"
#include "kieb/datasets.hpp"
#include "kieb/errors.hpp"
#include "kieb/fft.hpp"
#include "kieb/metrics.hpp"
#include "kieb/phantom.hpp"
#include "kieb/recon.hpp"
#include "kieb/run_config.hpp"
#include "kieb/seeds.hpp"
#include "kieb/tensor_file.hpp"
#include "kieb/train.hpp"

namespace fs = std::filesystem;
using namespace kieb;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

RunConfig config_from_flag(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

void check_finite(const RealImage& img, const std::string& what) {
  for (double v : img.data) {
    if (!std::isfinite(v)) throw NumericError(what + " contains non-finite values");
  }
}

void check_finite(const CoilStack& s, const std::string& what) {
  for (const cdouble& v : s.data) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericError(what + " contains non-finite values");
    }
  }
}

std::string indexed_name(const std::string& stem, int index, int count) {
  if (count == 1) return stem + ".kieb";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%03d.kieb", index);
  return stem + buf;
}

// ---------------------------------------------------------------- phantom --

struct PhantomArgs {
  std::vector<int> size{64, 64};
  int coils = 4;
  std::uint64_t seed = 0;
  int count = 1;
  std::string out;
  std::string mask_path;
  double noise_sigma = 0.0;
};

int run_phantom(const PhantomArgs& a) {
  if (a.size.size() != 2 || a.size[0] < 8 || a.size[1] < 8) {
    throw ParamError("phantom: --size expects H W with both >= 8");
  }
  if (a.coils < 1) throw ParamError("phantom: need at least one coil");
  if (a.count < 1) throw ParamError("phantom: --count must be >= 1");
  const int h = a.size[0], w = a.size[1];

  SamplingMask mask;
  const bool simulate = !a.mask_path.empty();
  if (simulate) {
    mask = mask_pattern_from_blob(read_tensor_file(a.mask_path));
    if (mask.h != h || mask.w != w) {
      throw ParamError("phantom: mask shape does not match --size");
    }
  }

  ordered_json files = ordered_json::array();
  for (int i = 0; i < a.count; ++i) {
    // A single case is the canonical phantom; multi-case sets are randomized
    // variants so training families do not contain the benchmark image.
    RealImage truth = a.count == 1 ? shepp_logan(h, w)
                                   : shepp_logan_variant(h, w, mix_seed(a.seed, i));
    SensitivityMaps sens =
        synth_sensitivities(a.coils, h, w, mix_seed(a.seed, 1000 + i));

    const std::string truth_name = indexed_name("truth", i, a.count);
    const std::string sens_name = indexed_name("sens", i, a.count);
    write_tensor_file(fs::path(a.out) / truth_name, to_blob(truth));
    write_tensor_file(fs::path(a.out) / sens_name, to_blob(sens.maps));
    files.push_back(truth_name);
    files.push_back(sens_name);

    if (simulate) {
      CoilStack meas = simulate_acquisition(truth, sens, mask, a.noise_sigma,
                                            mix_seed(a.seed, 2000 + i));
      const std::string meas_name = indexed_name("meas", i, a.count);
      write_tensor_file(fs::path(a.out) / meas_name, to_blob(meas));
      files.push_back(meas_name);
    }
  }

  ordered_json meta{{"size", {h, w}},
                    {"coils", a.coils},
                    {"seed", a.seed},
                    {"count", a.count},
                    {"noise_sigma", a.noise_sigma},
                    {"mask", a.mask_path},
                    {"files", files}};
  write_file_atomic(fs::path(a.out) / "meta.json", meta.dump(2) + "\n");
  std::cout << "phantom count=" << a.count << " size=" << h << "x" << w
            << " coils=" << a.coils << " out=" << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- mask-gen --

struct MaskArgs {
  std::string kind = "random2d";
  int accel = 4;
  std::vector<int> size{64, 64};
  std::uint64_t seed = 0;
  int acs = 0;
  std::string out;
};

int run_mask_gen(const MaskArgs& a) {
  if (a.size.size() != 2) throw ParamError("mask-gen: --size expects H W");
  SamplingMask m =
      generate_mask(mask_kind_from_string(a.kind), a.accel, a.size[0], a.size[1],
                    a.seed, a.acs);
  write_tensor_file(a.out, to_blob(m));
  std::cout << "kind=" << a.kind << " accel=" << a.accel << " size=" << a.size[0]
            << "x" << a.size[1] << " seed=" << a.seed << " acs=" << a.acs
            << " samples=" << m.sample_count()
            << " density=" << format_fixed(m.density())
            << " target=" << format_fixed(1.0 / a.accel) << "\n";
  return 0;
}

// ------------------------------------------------------------- weight-gen --

struct WeightArgs {
  double r = 0.1;
  double p = 0.5;
  std::vector<int> size{64, 64};
  double floor_frac = 1e-3;
  std::string out;
};

int run_weight_gen(const WeightArgs& a) {
  if (a.size.size() != 2) throw ParamError("weight-gen: --size expects H W");
  WeightMatrix w = weight_matrix(a.r, a.p, a.size[0], a.size[1], a.floor_frac);
  write_tensor_file(a.out, to_blob(w));
  std::cout << "r=" << format_double(a.r) << " p=" << format_double(a.p)
            << " floor=" << format_double(w.floor) << " out=" << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ train --

struct TrainArgs {
  std::string domain;
  std::string data;
  std::string config;
  std::string out;
};

std::vector<PhantomCase> load_cases(const fs::path& dir) {
  std::vector<PhantomCase> cases;
  auto load_pair = [&cases](const fs::path& truth, const fs::path& sens) {
    PhantomCase pc;
    pc.truth = image_from_blob(read_tensor_file(truth));
    pc.sens = SensitivityMaps{coil_stack_from_blob(read_tensor_file(sens))};
    if (pc.sens.maps.h != pc.truth.h || pc.sens.maps.w != pc.truth.w) {
      throw IoError("training case " + truth.string() + ": shape mismatch");
    }
    cases.push_back(std::move(pc));
  };

  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  if (fs::exists(dir / "truth.kieb")) {
    load_pair(dir / "truth.kieb", dir / "sens.kieb");
  }
  std::vector<fs::path> truths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("truth_", 0) == 0 && entry.path().extension() == ".kieb") {
      truths.push_back(entry.path());
    }
  }
  std::sort(truths.begin(), truths.end());
  for (const fs::path& t : truths) {
    std::string sens_name = t.filename().string();
    sens_name.replace(0, 5, "sens");
    load_pair(t, t.parent_path() / sens_name);
  }
  if (cases.empty()) throw IoError("no truth*.kieb files under " + dir.string());
  return cases;
}

template <typename T>
int train_typed(const RunConfig& rc, Domain domain,
                const std::vector<Tensor4<double>>& samples, const fs::path& out) {
  std::vector<Tensor4<T>> dataset = cast_samples<T>(samples);

  EnergyModel<T> model{
      EnergyNet<T>::random_init(rc.net, mix_seed(rc.recon.seed, 0xA11), 0.0), domain};
  ReplayBuffer<T> buffer(rc.train.buffer_capacity, mix_seed(rc.recon.seed, 0xB0F));

  TrainConfig tc;
  tc.epochs = rc.train.epochs;
  tc.steps_override = rc.train.steps;
  tc.batch = rc.train.batch;
  tc.lr = rc.train.lr > 0.0 ? rc.train.lr : default_lr(domain);
  tc.langevin = rc.train.langevin;
  tc.buffer_capacity = rc.train.buffer_capacity;
  tc.buffer_fraction = rc.train.buffer_fraction;
  tc.data_noise_base = rc.train.data_noise_base;
  tc.energy_l2 = rc.train.energy_l2;
  tc.seed = mix_seed(rc.recon.seed, 0x7EA1);

  AdamState<T> adam;
  adam.lr = tc.lr;
  std::vector<StepStats> trace = train(model, dataset, buffer, tc, adam);
  for (T v : model.net.params()) {
    if (!std::isfinite(double(v))) throw NumericError("trained parameters contain NaN");
  }

  ordered_json extra{
      {"seed", rc.recon.seed},
      {"train_config",
       ordered_json{{"steps", tc.steps_for(dataset.size())},
                    {"batch", tc.batch},
                    {"lr", tc.lr},
                    {"buffer_capacity", tc.buffer_capacity},
                    {"buffer_fraction", tc.buffer_fraction},
                    {"data_noise_base", tc.data_noise_base},
                    {"energy_l2", tc.energy_l2},
                    {"langevin", ordered_json{{"step", tc.langevin.step},
                                              {"steps", tc.langevin.steps},
                                              {"noise_scale", tc.langevin.noise_scale},
                                              {"grad_clip", tc.langevin.grad_clip},
                                              {"anneal", tc.langevin.anneal}}},
                    {"samples", dataset.size()}}},
  };
  if (domain == Domain::weighted_kspace) {
    extra["weight"] = ordered_json{{"r", rc.recon.weight.r},
                                   {"p", rc.recon.weight.p},
                                   {"floor_frac", rc.recon.weight.floor_frac}};
  }
  save_checkpoint(out, make_checkpoint(model, extra));

  std::string csv = "step,loss,energy_pos,energy_neg\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(trace[i].loss) + "," +
           format_double(trace[i].energy_pos) + "," +
           format_double(trace[i].energy_neg) + "\n";
  }
  write_file_atomic(out.string() + ".loss.csv", csv);
  std::cout << "trained domain=" << domain_name(domain) << " steps=" << trace.size()
            << " samples=" << samples.size() << " out=" << out.string() << "\n";
  return 0;
}

int run_train(const TrainArgs& a) {
  Domain domain;
  if (a.domain == "image") {
    domain = Domain::image;
  } else if (a.domain == "kspace") {
    domain = Domain::weighted_kspace;
  } else {
    throw ParamError("train: --domain must be image or kspace");
  }
  RunConfig rc = config_from_flag(a.config);
  const std::string data_dir = !a.data.empty() ? a.data : rc.paths.data;
  if (data_dir.empty()) throw ParamError("train: no data directory given");
  const std::string out = !a.out.empty() ? a.out : rc.paths.out;
  if (out.empty()) throw ParamError("train: no output checkpoint path given");

  std::vector<PhantomCase> cases = load_cases(data_dir);
  std::vector<Tensor4<double>> samples =
      domain == Domain::image ? image_domain_samples(cases)
                              : kspace_domain_samples(cases, rc.recon.weight);

  if (rc.train.precision == "real64") {
    return train_typed<double>(rc, domain, samples, out);
  }
  return train_typed<float>(rc, domain, samples, out);
}

// ------------------------------------------------------------ reconstruct --

struct ReconArgs {
  std::string method;
  std::string meas;
  std::string mask;
  std::vector<std::string> ckpts;
  std::string config;
  std::string out;
  std::string truth;
  std::string sens;
};

template <typename T>
ReconResult run_solver(const CoilStack& f, const SamplingMask& mask,
                       const LoadedModel* mk, const LoadedModel* mi,
                       const ReconConfig& cfg, const SensitivityMaps* sens,
                       const RealImage* truth) {
  const EnergyModel<T>* model_k = mk ? &std::get<EnergyModel<T>>(mk->model) : nullptr;
  const EnergyModel<T>* model_i = mi ? &std::get<EnergyModel<T>>(mi->model) : nullptr;
  return reconstruct<T>(f, mask, model_k, model_i, cfg, sens, truth);
}

int run_reconstruct(const ReconArgs& a) {
  RunConfig rc = config_from_flag(a.config);
  ReconConfig cfg = rc.recon;
  cfg.method = method_from_string(a.method);

  const std::string meas_path = !a.meas.empty() ? a.meas : rc.paths.meas;
  const std::string mask_path = !a.mask.empty() ? a.mask : rc.paths.mask;
  const std::string out_dir = !a.out.empty() ? a.out : rc.paths.out;
  const std::string truth_path = !a.truth.empty() ? a.truth : rc.paths.truth;
  const std::string sens_path = !a.sens.empty() ? a.sens : rc.paths.sens;
  if (meas_path.empty() || mask_path.empty() || out_dir.empty()) {
    throw ParamError("reconstruct: --meas, --mask and --out are required");
  }

  CoilStack f = coil_stack_from_blob(read_tensor_file(meas_path));
  SamplingMask mask = mask_pattern_from_blob(read_tensor_file(mask_path));

  std::vector<std::string> ckpts = a.ckpts;
  if (ckpts.empty()) {
    if (!rc.paths.ckpt_kspace.empty()) ckpts.push_back(rc.paths.ckpt_kspace);
    if (!rc.paths.ckpt_image.empty()) ckpts.push_back(rc.paths.ckpt_image);
  }
  if (ckpts.empty()) throw ParamError("reconstruct: no checkpoints given");

  std::vector<LoadedModel> models;
  models.reserve(ckpts.size());
  for (const std::string& c : ckpts) models.push_back(load_model(c));
  const LoadedModel* mk = nullptr;
  const LoadedModel* mi = nullptr;
  for (const LoadedModel& m : models) {
    (m.domain == Domain::weighted_kspace ? mk : mi) = &m;
  }
  for (const LoadedModel& m : models) {
    if (m.precision != models.front().precision) {
      throw ConfigError("reconstruct: checkpoints must share one precision");
    }
  }

  RealImage truth;
  const bool have_truth = !truth_path.empty();
  if (have_truth) truth = image_from_blob(read_tensor_file(truth_path));
  SensitivityMaps sens;
  const bool have_sens = !sens_path.empty();
  if (have_sens) {
    sens = SensitivityMaps{coil_stack_from_blob(read_tensor_file(sens_path))};
  }

  const Dtype precision = models.front().precision;
  ReconResult res =
      precision == Dtype::real32
          ? run_solver<float>(f, mask, mk, mi, cfg, have_sens ? &sens : nullptr,
                              have_truth ? &truth : nullptr)
          : run_solver<double>(f, mask, mk, mi, cfg, have_sens ? &sens : nullptr,
                               have_truth ? &truth : nullptr);

  check_finite(res.image, "reconstruction");
  check_finite(res.kspace, "reconstructed k-space");

  const fs::path out(out_dir);
  write_tensor_file(out / "recon.kieb", to_blob(res.image));
  write_tensor_file(out / "coil_images.kieb", to_blob(res.coil_images));
  write_tensor_file(out / "kspace.kieb", to_blob(res.kspace));
  if (have_truth) {
    std::string csv = "iter,psnr_db\n";
    for (std::size_t i = 0; i < res.psnr_trace.size(); ++i) {
      csv += std::to_string(i) + "," + format_double(res.psnr_trace[i]) + "\n";
    }
    write_file_atomic(out / "trace.csv", csv);
  }
  std::cout << "method=" << method_name(cfg.method) << " iters=" << cfg.outer_iters
            << (have_truth && !res.psnr_trace.empty()
                    ? " psnr_db=" + format_fixed(res.psnr_trace.back())
                    : "")
            << " out=" << out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- eval --

struct EvalArgs {
  std::string recon;
  std::string truth;
};

int run_eval(const EvalArgs& a) {
  RealImage recon = image_from_blob(read_tensor_file(a.recon));
  RealImage truth = image_from_blob(read_tensor_file(a.truth));
  check_finite(recon, "recon image");
  check_finite(truth, "truth image");
  MetricReport rep = evaluate(recon, truth);
  std::cout << "psnr_db=" << format_fixed(rep.psnr_db)
            << " ssim=" << format_fixed(rep.ssim)
            << " data_range=" << format_fixed(rep.data_range) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-model based parallel-MRI reconstruction (k-space + image domain)"};
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "generate synthetic ground truth");
  phantom->add_option("--size", pa.size, "image size H W")->expected(2);
  phantom->add_option("--coils", pa.coils, "number of receive coils");
  phantom->add_option("--seed", pa.seed, "random seed");
  phantom->add_option("--count", pa.count, "number of phantom cases");
  phantom->add_option("--out", pa.out, "output directory")->required();
  phantom->add_option("--mask", pa.mask_path,
                      "also simulate measurements with this mask");
  phantom->add_option("--noise-sigma", pa.noise_sigma, "acquisition noise std");

  MaskArgs ma;
  auto* maskgen = app.add_subcommand("mask-gen", "generate a sampling mask");
  maskgen->add_option("--kind", ma.kind, "cartesian1d|random2d|poisson2d");
  maskgen->add_option("--accel", ma.accel, "acceleration factor R")->required();
  maskgen->add_option("--size", ma.size, "mask size H W")->expected(2);
  maskgen->add_option("--seed", ma.seed, "random seed");
  maskgen->add_option("--acs", ma.acs, "centered ACS lines (cartesian)");
  maskgen->add_option("--out", ma.out, "output tensor file")->required();

  WeightArgs wa;
  auto* weightgen = app.add_subcommand("weight-gen", "generate a k-space weight matrix");
  weightgen->add_option("--r", wa.r, "cutoff parameter");
  weightgen->add_option("--p", wa.p, "smoothness parameter");
  weightgen->add_option("--size", wa.size, "matrix size H W")->expected(2);
  weightgen->add_option("--floor-frac", wa.floor_frac, "relative clamp floor");
  weightgen->add_option("--out", wa.out, "output tensor file")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train an energy model");
  train_cmd->add_option("--domain", ta.domain, "image|kspace")->required();
  train_cmd->add_option("--data", ta.data, "directory with truth*/sens* files");
  train_cmd->add_option("--config", ta.config, "JSON run configuration");
  train_cmd->add_option("--out", ta.out, "output checkpoint path");

  ReconArgs ra;
  auto* recon_cmd = app.add_subcommand("reconstruct", "reconstruct from measurements");
  recon_cmd->add_option("--method", ra.method, "i-ebm|k-ebm|pki-ebm|ski-ebm")
      ->required();
  recon_cmd->add_option("--meas", ra.meas, "measured k-space tensor file");
  recon_cmd->add_option("--mask", ra.mask, "sampling mask tensor file");
  recon_cmd->add_option("--ckpt", ra.ckpts, "model checkpoint (repeatable)");
  recon_cmd->add_option("--config", ra.config, "JSON run configuration");
  recon_cmd->add_option("--out", ra.out, "output directory");
  recon_cmd->add_option("--truth", ra.truth, "ground truth for the PSNR trace");
  recon_cmd->add_option("--sens", ra.sens, "sensitivity maps (sensitivity-known mode)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "compare a reconstruction to ground truth");
  eval_cmd->add_option("--recon", ea.recon, "reconstructed image")->required();
  eval_cmd->add_option("--truth", ea.truth, "reference image")->required();

  auto* version_cmd = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (phantom->parsed()) return run_phantom(pa);
    if (maskgen->parsed()) return run_mask_gen(ma);
    if (weightgen->parsed()) return run_weight_gen(wa);
    if (train_cmd->parsed()) return run_train(ta);
    if (recon_cmd->parsed()) return run_reconstruct(ra);
    if (eval_cmd->parsed()) return run_eval(ea);
    if (version_cmd->parsed()) {
      std::cout << "kieb " << kVersion << "\n";
      return 0;
    }
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
