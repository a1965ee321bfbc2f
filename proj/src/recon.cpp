#include "kieb/recon.hpp"

#include <cmath>
#include <random>

#include "kieb/errors.hpp"
#include "kieb/fft.hpp"
#include "kieb/metrics.hpp"

namespace kieb {

Method method_from_string(const std::string& s) {
  if (s == "i-ebm") return Method::i_ebm;
  if (s == "k-ebm") return Method::k_ebm;
  if (s == "pki-ebm") return Method::pki_ebm;
  if (s == "ski-ebm") return Method::ski_ebm;
  throw ParamError("unknown reconstruction method: " + s);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::i_ebm: return "i-ebm";
    case Method::k_ebm: return "k-ebm";
    case Method::pki_ebm: return "pki-ebm";
    case Method::ski_ebm: return "ski-ebm";
  }
  return "?";
}

void ReconConfig::validate() const {
  if (outer_iters < 1) throw ParamError("ReconConfig: outer_iters must be >= 1");
  if (lambda_i < 0.0 || lambda_k < 0.0) {
    throw ParamError("ReconConfig: lambda values must be >= 0");
  }
  langevin.validate();
}

CoilStack dc_kspace(const CoilStack& k_est, const CoilStack& f,
                    const SamplingMask& mask, double lambda_k) {
  if (!k_est.same_shape(f)) throw ShapeError("dc_kspace: estimate/measurement mismatch");
  if (k_est.h != mask.h || k_est.w != mask.w) {
    throw ShapeError("dc_kspace: mask shape mismatch");
  }
  CoilStack out = k_est;
  const double denom = 1.0 + lambda_k;
  for (int c = 0; c < out.coils; ++c) {
    cdouble* o = out.plane(c);
    const cdouble* fp = f.plane(c);
    for (std::size_t i = 0; i < out.plane_size(); ++i) {
      if (mask.pattern[i]) {
        o[i] = lambda_k == 0.0 ? fp[i] : (fp[i] + lambda_k * o[i]) / denom;
      }
    }
  }
  return out;
}

CoilStack dc_image(const CoilStack& img_est, const CoilStack& f,
                   const SamplingMask& mask, double lambda_i) {
  return ifft2c(dc_kspace(fft2c(img_est), f, mask, lambda_i));
}

namespace {

// Per-coil normalization so the network sees unit-max-magnitude inputs,
// matching how the training samples are scaled. Fixed at initialization.
std::vector<double> coil_scales(const CoilStack& s) {
  std::vector<double> out(s.coils, 1.0);
  for (int c = 0; c < s.coils; ++c) {
    double m = 0.0;
    const cdouble* p = s.plane(c);
    for (std::size_t i = 0; i < s.plane_size(); ++i) m = std::max(m, std::abs(p[i]));
    out[c] = m > 1e-12 ? m : 1.0;
  }
  return out;
}

template <typename T>
CoilStack refine_stack(const CoilStack& in, const EnergyModel<T>& model,
                       const std::vector<double>& scales, const LangevinConfig& lc,
                       std::mt19937_64& rng) {
  Tensor4<double> t(in.coils, 2, in.h, in.w);
  for (int c = 0; c < in.coils; ++c) {
    const double inv = 1.0 / scales[c];
    const cdouble* p = in.plane(c);
    double* re = t.plane(c, 0);
    double* im = t.plane(c, 1);
    for (std::size_t i = 0; i < in.plane_size(); ++i) {
      re[i] = p[i].real() * inv;
      im[i] = p[i].imag() * inv;
    }
  }
  Tensor4<T> x = t.template cast<T>();
  x = langevin_sample(model.net, std::move(x), lc, rng);
  Tensor4<double> d = x.template cast<double>();
  CoilStack out(in.coils, in.h, in.w);
  for (int c = 0; c < in.coils; ++c) {
    const double s = scales[c];
    cdouble* p = out.plane(c);
    const double* re = d.plane(c, 0);
    const double* im = d.plane(c, 1);
    for (std::size_t i = 0; i < out.plane_size(); ++i) {
      p[i] = cdouble(re[i] * s, im[i] * s);
    }
  }
  return out;
}

template <typename T>
ComplexImage refine_single(const ComplexImage& in, const EnergyModel<T>& model,
                           double scale, const LangevinConfig& lc,
                           std::mt19937_64& rng) {
  CoilStack wrap(1, in.h, in.w);
  wrap.set_coil(0, in);
  CoilStack out = refine_stack(wrap, model, {scale}, lc, rng);
  return out.coil(0);
}

double trace_psnr(const RealImage& x, const RealImage& ref) {
  const double m = ref.max_value();
  if (m <= 0.0) return 0.0;
  RealImage xs = x, rs = ref;
  for (double& v : xs.data) v /= m;
  for (double& v : rs.data) v /= m;
  return psnr(xs, rs, 1.0);
}

RealImage magnitude_image(const ComplexImage& img) {
  RealImage out(img.h, img.w);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = std::abs(img.data[i]);
  return out;
}

void check_inputs(const CoilStack& f, const SamplingMask& mask) {
  if (f.coils < 1) throw ParamError("reconstruct: empty measurement stack");
  if (f.h != mask.h || f.w != mask.w) {
    throw ShapeError("reconstruct: measurement/mask shape mismatch");
  }
}

void require_domain(Domain have, Domain want, const char* what) {
  if (have != want) {
    throw ConfigError(std::string(what) + " solver needs a " + domain_name(want) +
                      " model, got " + domain_name(have));
  }
}

// Annealed dynamics for outer iteration `it`: the step size decays
// geometrically, which shrinks both the drift and (through sqrt(step)) the
// injected noise, so late iterations settle instead of wandering.
LangevinConfig annealed(const LangevinConfig& lc, int it) {
  LangevinConfig out = lc;
  out.step = lc.step * std::pow(lc.anneal, it);
  return out;
}

// Where the weight sits at its clamp floor the multiply/divide pair is not
// faithful, so prior updates there are discarded and the previous estimate
// kept (the DC coefficient for p > 0; everything when r = 0).
void keep_clamped(CoilStack& refined, const CoilStack& prev, const WeightMatrix& w) {
  for (int c = 0; c < refined.coils; ++c) {
    cdouble* r = refined.plane(c);
    const cdouble* p = prev.plane(c);
    for (std::size_t i = 0; i < refined.plane_size(); ++i) {
      if (w.clamped_at(i)) r[i] = p[i];
    }
  }
}

// One weighted-k-space prior pass followed by data consistency.
template <typename T>
void kspace_outer_step(CoilStack& k, const CoilStack& f, const SamplingMask& mask,
                       const EnergyModel<T>& model_k, const WeightMatrix& w,
                       const std::vector<double>& scales, const ReconConfig& cfg,
                       int it, std::mt19937_64& rng) {
  CoilStack kw = apply_weight(k, w);
  kw = refine_stack(kw, model_k, scales, annealed(cfg.langevin, it), rng);
  CoilStack refined = unapply_weight(kw, w);
  keep_clamped(refined, k, w);
  k = dc_kspace(refined, f, mask, cfg.lambda_k);
}

}  // namespace

template <typename T>
ReconResult recon_kebm(const CoilStack& f, const SamplingMask& mask,
                       const EnergyModel<T>& model_k, const ReconConfig& cfg,
                       const RealImage* truth) {
  cfg.validate();
  check_inputs(f, mask);
  require_domain(model_k.domain, Domain::weighted_kspace, "k-ebm");

  const WeightMatrix w =
      weight_matrix(cfg.weight.r, cfg.weight.p, f.h, f.w, cfg.weight.floor_frac);
  std::mt19937_64 rng(cfg.seed);
  CoilStack k = f;
  const std::vector<double> scales = coil_scales(apply_weight(k, w));

  ReconResult res;
  for (int it = 0; it < cfg.outer_iters; ++it) {
    kspace_outer_step(k, f, mask, model_k, w, scales, cfg, it, rng);
    if (truth) res.psnr_trace.push_back(trace_psnr(sos_combine(ifft2c(k)), *truth));
  }
  res.kspace = k;
  res.coil_images = ifft2c(k);
  res.image = sos_combine(res.coil_images);
  return res;
}

template <typename T>
ReconResult recon_iebm(const CoilStack& f, const SamplingMask& mask,
                       const EnergyModel<T>& model_i, const ReconConfig& cfg,
                       const SensitivityMaps* sens, const RealImage* truth) {
  cfg.validate();
  check_inputs(f, mask);
  require_domain(model_i.domain, Domain::image, "i-ebm");

  std::mt19937_64 rng(cfg.seed);
  CoilStack k = f;
  CoilStack imgs = ifft2c(k);
  ReconResult res;

  if (cfg.calibration == Calibration::sensitivity_known) {
    if (!sens) throw ConfigError("i-ebm: sensitivity-known mode needs maps");
    if (!sens->maps.same_shape(f)) throw ShapeError("i-ebm: sensitivity shape mismatch");
    ComplexImage combined = adjoint_sensitivities(imgs, *sens);
    const double scale = std::max(max_magnitude(combined), 1e-12);
    for (int it = 0; it < cfg.outer_iters; ++it) {
      combined = refine_single(combined, model_i, scale, annealed(cfg.langevin, it), rng);
      k = dc_kspace(fft2c(apply_sensitivities(combined, *sens)), f, mask, cfg.lambda_i);
      imgs = ifft2c(k);
      combined = adjoint_sensitivities(imgs, *sens);
      if (truth) res.psnr_trace.push_back(trace_psnr(magnitude_image(combined), *truth));
    }
    res.image = magnitude_image(combined);
  } else {
    const std::vector<double> scales = coil_scales(imgs);
    for (int it = 0; it < cfg.outer_iters; ++it) {
      imgs = refine_stack(imgs, model_i, scales, annealed(cfg.langevin, it), rng);
      k = dc_kspace(fft2c(imgs), f, mask, cfg.lambda_i);
      imgs = ifft2c(k);
      if (truth) res.psnr_trace.push_back(trace_psnr(sos_combine(imgs), *truth));
    }
    res.image = sos_combine(imgs);
  }
  res.kspace = k;
  res.coil_images = imgs;
  return res;
}

template <typename T>
ReconResult recon_pki(const CoilStack& f, const SamplingMask& mask,
                      const EnergyModel<T>& model_k, const EnergyModel<T>& model_i,
                      const ReconConfig& cfg, const SensitivityMaps* sens,
                      const RealImage* truth) {
  cfg.validate();
  check_inputs(f, mask);
  require_domain(model_k.domain, Domain::weighted_kspace, "pki-ebm");
  require_domain(model_i.domain, Domain::image, "pki-ebm");
  const bool known = cfg.calibration == Calibration::sensitivity_known;
  if (known && !sens) throw ConfigError("pki-ebm: sensitivity-known mode needs maps");

  const WeightMatrix w =
      weight_matrix(cfg.weight.r, cfg.weight.p, f.h, f.w, cfg.weight.floor_frac);
  std::mt19937_64 rng(cfg.seed);
  CoilStack k = f;
  const std::vector<double> scales_k = coil_scales(apply_weight(k, w));
  CoilStack imgs0 = ifft2c(k);
  const std::vector<double> scales_i = coil_scales(imgs0);
  const double scale_single =
      known ? std::max(max_magnitude(adjoint_sensitivities(imgs0, *sens)), 1e-12) : 1.0;

  ReconResult res;
  for (int it = 0; it < cfg.outer_iters; ++it) {
    const LangevinConfig lc = annealed(cfg.langevin, it);

    // Both branches start from the same post-DC iterate.
    CoilStack kw = apply_weight(k, w);
    kw = refine_stack(kw, model_k, scales_k, lc, rng);
    CoilStack k_branch = unapply_weight(kw, w);
    keep_clamped(k_branch, k, w);

    CoilStack imgs = ifft2c(k);
    CoilStack refined_imgs(imgs.coils, imgs.h, imgs.w);
    if (known) {
      ComplexImage combined = adjoint_sensitivities(imgs, *sens);
      combined = refine_single(combined, model_i, scale_single, lc, rng);
      refined_imgs = apply_sensitivities(combined, *sens);
    } else {
      refined_imgs = refine_stack(imgs, model_i, scales_i, lc, rng);
    }
    CoilStack i_branch = fft2c(refined_imgs);

    // Equal-weight average of the two k-space estimates, then consistency.
    for (std::size_t i = 0; i < k.size(); ++i) {
      k.data[i] = 0.5 * (k_branch.data[i] + i_branch.data[i]);
    }
    k = dc_kspace(k, f, mask, cfg.lambda_k);
    if (truth) res.psnr_trace.push_back(trace_psnr(sos_combine(ifft2c(k)), *truth));
  }
  res.kspace = k;
  res.coil_images = ifft2c(k);
  res.image = sos_combine(res.coil_images);
  return res;
}

template <typename T>
ReconResult recon_ski(const CoilStack& f, const SamplingMask& mask,
                      const EnergyModel<T>& model_k, const EnergyModel<T>& model_i,
                      const ReconConfig& cfg, const SensitivityMaps* sens,
                      const RealImage* truth) {
  cfg.validate();
  check_inputs(f, mask);
  require_domain(model_k.domain, Domain::weighted_kspace, "ski-ebm");
  require_domain(model_i.domain, Domain::image, "ski-ebm");
  const bool known = cfg.calibration == Calibration::sensitivity_known;
  if (known && !sens) throw ConfigError("ski-ebm: sensitivity-known mode needs maps");

  const WeightMatrix w =
      weight_matrix(cfg.weight.r, cfg.weight.p, f.h, f.w, cfg.weight.floor_frac);
  std::mt19937_64 rng(cfg.seed);

  // Stage 1: k-space interpolation filling the missing values.
  CoilStack k = f;
  const std::vector<double> scales_k = coil_scales(apply_weight(k, w));
  ReconResult res;
  for (int it = 0; it < cfg.outer_iters; ++it) {
    kspace_outer_step(k, f, mask, model_k, w, scales_k, cfg, it, rng);
    if (truth) res.psnr_trace.push_back(trace_psnr(sos_combine(ifft2c(k)), *truth));
  }

  // Stage 2: image-domain refinement of the stage-1 estimate. The noise
  // anneal continues across the stage boundary.
  const int stage2 = cfg.stage2_iters >= 0 ? cfg.stage2_iters : cfg.outer_iters;
  CoilStack imgs = ifft2c(k);
  if (known) {
    ComplexImage combined = adjoint_sensitivities(imgs, *sens);
    const double scale = std::max(max_magnitude(combined), 1e-12);
    for (int it = 0; it < stage2; ++it) {
      combined = refine_single(combined, model_i, scale,
                               annealed(cfg.langevin, cfg.outer_iters + it), rng);
      k = dc_kspace(fft2c(apply_sensitivities(combined, *sens)), f, mask, cfg.lambda_i);
      imgs = ifft2c(k);
      combined = adjoint_sensitivities(imgs, *sens);
      if (truth) res.psnr_trace.push_back(trace_psnr(magnitude_image(combined), *truth));
    }
    res.image = magnitude_image(combined);
  } else {
    const std::vector<double> scales_i = coil_scales(imgs);
    for (int it = 0; it < stage2; ++it) {
      imgs = refine_stack(imgs, model_i, scales_i,
                          annealed(cfg.langevin, cfg.outer_iters + it), rng);
      k = dc_kspace(fft2c(imgs), f, mask, cfg.lambda_i);
      imgs = ifft2c(k);
      if (truth) res.psnr_trace.push_back(trace_psnr(sos_combine(imgs), *truth));
    }
    res.image = sos_combine(imgs);
  }
  res.kspace = k;
  res.coil_images = imgs;
  return res;
}

template <typename T>
ReconResult reconstruct(const CoilStack& f, const SamplingMask& mask,
                        const EnergyModel<T>* model_k, const EnergyModel<T>* model_i,
                        const ReconConfig& cfg, const SensitivityMaps* sens,
                        const RealImage* truth) {
  switch (cfg.method) {
    case Method::i_ebm:
      if (!model_i) throw ConfigError("i-ebm needs an image-domain model");
      return recon_iebm(f, mask, *model_i, cfg, sens, truth);
    case Method::k_ebm:
      if (!model_k) throw ConfigError("k-ebm needs a weighted-kspace model");
      return recon_kebm(f, mask, *model_k, cfg, truth);
    case Method::pki_ebm:
      if (!model_k || !model_i) throw ConfigError("pki-ebm needs both domain models");
      return recon_pki(f, mask, *model_k, *model_i, cfg, sens, truth);
    case Method::ski_ebm:
      if (!model_k || !model_i) throw ConfigError("ski-ebm needs both domain models");
      return recon_ski(f, mask, *model_k, *model_i, cfg, sens, truth);
  }
  throw ConfigError("reconstruct: unknown method");
}

#define KIEB_INSTANTIATE_RECON(T)                                                  \
  template ReconResult recon_iebm<T>(const CoilStack&, const SamplingMask&,        \
                                     const EnergyModel<T>&, const ReconConfig&,    \
                                     const SensitivityMaps*, const RealImage*);    \
  template ReconResult recon_kebm<T>(const CoilStack&, const SamplingMask&,        \
                                     const EnergyModel<T>&, const ReconConfig&,    \
                                     const RealImage*);                            \
  template ReconResult recon_pki<T>(const CoilStack&, const SamplingMask&,         \
                                    const EnergyModel<T>&, const EnergyModel<T>&,  \
                                    const ReconConfig&, const SensitivityMaps*,    \
                                    const RealImage*);                             \
  template ReconResult recon_ski<T>(const CoilStack&, const SamplingMask&,         \
                                    const EnergyModel<T>&, const EnergyModel<T>&,  \
                                    const ReconConfig&, const SensitivityMaps*,    \
                                    const RealImage*);                             \
  template ReconResult reconstruct<T>(const CoilStack&, const SamplingMask&,       \
                                      const EnergyModel<T>*, const EnergyModel<T>*,\
                                      const ReconConfig&, const SensitivityMaps*,  \
                                      const RealImage*);

KIEB_INSTANTIATE_RECON(float)
KIEB_INSTANTIATE_RECON(double)

#undef KIEB_INSTANTIATE_RECON

}  // namespace kieb
