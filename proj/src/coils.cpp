#include "kieb/coils.hpp"

#include <cmath>

#include "kieb/errors.hpp"

namespace kieb {

RealImage sos_combine(const CoilStack& coils) {
  if (coils.coils < 1) throw ParamError("sos_combine: empty coil stack");
  RealImage out(coils.h, coils.w);
  for (int c = 0; c < coils.coils; ++c) {
    const cdouble* p = coils.plane(c);
    for (std::size_t i = 0; i < coils.plane_size(); ++i) {
      out.data[i] += std::norm(p[i]);
    }
  }
  for (double& v : out.data) v = std::sqrt(v);
  return out;
}

CoilStack apply_sensitivities(const ComplexImage& image, const SensitivityMaps& sens) {
  if (image.h != sens.maps.h || image.w != sens.maps.w) {
    throw ShapeError("apply_sensitivities: shape mismatch");
  }
  CoilStack out(sens.maps.coils, image.h, image.w);
  for (int c = 0; c < out.coils; ++c) {
    const cdouble* s = sens.maps.plane(c);
    cdouble* dst = out.plane(c);
    for (std::size_t i = 0; i < out.plane_size(); ++i) dst[i] = s[i] * image.data[i];
  }
  return out;
}

ComplexImage adjoint_sensitivities(const CoilStack& coils, const SensitivityMaps& sens) {
  if (!coils.same_shape(sens.maps)) {
    throw ShapeError("adjoint_sensitivities: shape mismatch");
  }
  ComplexImage out(coils.h, coils.w);
  for (int c = 0; c < coils.coils; ++c) {
    const cdouble* s = sens.maps.plane(c);
    const cdouble* p = coils.plane(c);
    for (std::size_t i = 0; i < coils.plane_size(); ++i) {
      out.data[i] += std::conj(s[i]) * p[i];
    }
  }
  return out;
}

}  // namespace kieb
