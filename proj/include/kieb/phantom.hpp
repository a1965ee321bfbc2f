#pragma once

#include <cstdint>

#include "kieb/coils.hpp"
#include "kieb/complex_types.hpp"
#include "kieb/mask.hpp"

namespace kieb {

// Standard low-contrast Shepp-Logan head phantom, intensities in [0, 1].
RealImage shepp_logan(int h, int w);

// Randomized variant: global rotation/scale/shift plus per-ellipse intensity
// jitter. Used to build small training families.
RealImage shepp_logan_variant(int h, int w, std::uint64_t seed);

// C smooth Gaussian lobes at equally spaced angles with mild per-coil linear
// phase, SOS-normalized everywhere.
SensitivityMaps synth_sensitivities(int coils, int h, int w, std::uint64_t seed = 0);

// Measured k-space f_c = M * (F(S_c * I) + n_c) with circular complex
// Gaussian noise of standard deviation noise_sigma; zero off the sample set.
CoilStack simulate_acquisition(const RealImage& image, const SensitivityMaps& sens,
                               const SamplingMask& mask, double noise_sigma,
                               std::uint64_t seed);

}  // namespace kieb
