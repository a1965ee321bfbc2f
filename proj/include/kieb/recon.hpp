#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kieb/coils.hpp"
#include "kieb/complex_types.hpp"
#include "kieb/energy_net.hpp"
#include "kieb/langevin.hpp"
#include "kieb/mask.hpp"
#include "kieb/weighting.hpp"

namespace kieb {

enum class Method { i_ebm, k_ebm, pki_ebm, ski_ebm };
enum class Calibration { sos_calibration_free, sensitivity_known };

Method method_from_string(const std::string& s);
const char* method_name(Method m);

struct WeightParams {
  double r = 0.1;
  double p = 0.5;
  double floor_frac = 1e-3;
};

struct ReconConfig {
  Method method = Method::pki_ebm;
  double lambda_i = 0.0;  // 0 = hard replacement on the sampled set
  double lambda_k = 0.0;
  int outer_iters = 200;
  int stage2_iters = -1;  // sequential stage 2; -1 mirrors outer_iters
  LangevinConfig langevin{.step = 2.0, .steps = 5, .noise_scale = 7e-3,
                          .grad_clip = 1e-2, .anneal = 0.95};
  WeightParams weight;
  Calibration calibration = Calibration::sos_calibration_free;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ReconResult {
  RealImage image;                 // non-negative combined output
  std::vector<double> psnr_trace;  // per outer iteration, when truth given
  CoilStack coil_images;           // final per-coil image estimates
  CoilStack kspace;                // final per-coil k-space (post data consistency)
};

// Closed-form data-consistency updates on the sampled set:
//   v not in Omega: estimate kept;  v in Omega: (f + lambda*estimate)/(1 + lambda).
CoilStack dc_kspace(const CoilStack& k_est, const CoilStack& f,
                    const SamplingMask& mask, double lambda_k);

// Same rule applied in the Fourier domain of a per-coil image estimate.
CoilStack dc_image(const CoilStack& img_est, const CoilStack& f,
                   const SamplingMask& mask, double lambda_i);

// The four solvers. Image-domain solvers can run calibration-free (per-coil
// refinement + SOS) or with known sensitivities (single combined image).
template <typename T>
ReconResult recon_iebm(const CoilStack& f, const SamplingMask& mask,
                       const EnergyModel<T>& model_i, const ReconConfig& cfg,
                       const SensitivityMaps* sens = nullptr,
                       const RealImage* truth = nullptr);

template <typename T>
ReconResult recon_kebm(const CoilStack& f, const SamplingMask& mask,
                       const EnergyModel<T>& model_k, const ReconConfig& cfg,
                       const RealImage* truth = nullptr);

template <typename T>
ReconResult recon_pki(const CoilStack& f, const SamplingMask& mask,
                      const EnergyModel<T>& model_k, const EnergyModel<T>& model_i,
                      const ReconConfig& cfg, const SensitivityMaps* sens = nullptr,
                      const RealImage* truth = nullptr);

template <typename T>
ReconResult recon_ski(const CoilStack& f, const SamplingMask& mask,
                      const EnergyModel<T>& model_k, const EnergyModel<T>& model_i,
                      const ReconConfig& cfg, const SensitivityMaps* sens = nullptr,
                      const RealImage* truth = nullptr);

// Method dispatch; model pointers may be null when the method does not use
// that domain.
template <typename T>
ReconResult reconstruct(const CoilStack& f, const SamplingMask& mask,
                        const EnergyModel<T>* model_k, const EnergyModel<T>* model_i,
                        const ReconConfig& cfg, const SensitivityMaps* sens = nullptr,
                        const RealImage* truth = nullptr);

}  // namespace kieb
