#pragma once

#include "kieb/complex_types.hpp"

namespace kieb {

// Per-coil sensitivity profiles S_c, SOS-normalized so that
// sum_c |S_c|^2 = 1 at every pixel.
struct SensitivityMaps {
  CoilStack maps;
};

// Root-sum-of-squares combination: per pixel sqrt(sum_c |I_c|^2).
RealImage sos_combine(const CoilStack& coils);

// Forward: I -> {S_c * I}. Adjoint: {I_c} -> sum_c conj(S_c) * I_c.
// With normalized maps, adjoint(forward(I)) = I.
CoilStack apply_sensitivities(const ComplexImage& image, const SensitivityMaps& sens);
ComplexImage adjoint_sensitivities(const CoilStack& coils, const SensitivityMaps& sens);

}  // namespace kieb
