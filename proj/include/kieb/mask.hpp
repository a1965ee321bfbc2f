#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kieb/complex_types.hpp"

namespace kieb {

enum class MaskKind { cartesian1d, random2d, poisson2d };

MaskKind mask_kind_from_string(const std::string& s);
const char* mask_kind_name(MaskKind k);

// Binary H x W sampling pattern. Columns are phase-encoding lines for the
// Cartesian kind (the frequency-encoding direction is fully sampled).
struct SamplingMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> pattern;  // 0 or 1
  MaskKind kind = MaskKind::cartesian1d;
  int accel = 1;
  std::uint64_t seed = 0;

  bool sampled(int y, int x) const {
    return pattern[static_cast<std::size_t>(y) * w + x] != 0;
  }
  std::size_t sample_count() const;
  double density() const;
};

// Deterministic per seed. cartesian1d keeps every accel-th column (aligned so
// the DC column is sampled) plus an optional centered ACS band; random2d draws
// a uniform subset of exactly round(h*w/accel) pixels; poisson2d saturates a
// dart-throwing process whose radius is calibrated by bisection, then thins or
// grows to the target density.
SamplingMask generate_mask(MaskKind kind, int accel, int h, int w,
                           std::uint64_t seed, int acs_lines = 0);

// Zero out unsampled k-space locations.
void apply_mask(CoilStack& k, const SamplingMask& mask);

}  // namespace kieb
