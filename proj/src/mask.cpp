#include "kieb/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kieb/errors.hpp"

namespace kieb {

MaskKind mask_kind_from_string(const std::string& s) {
  if (s == "cartesian1d") return MaskKind::cartesian1d;
  if (s == "random2d") return MaskKind::random2d;
  if (s == "poisson2d") return MaskKind::poisson2d;
  throw ParamError("unknown mask kind: " + s);
}

const char* mask_kind_name(MaskKind k) {
  switch (k) {
    case MaskKind::cartesian1d: return "cartesian1d";
    case MaskKind::random2d: return "random2d";
    case MaskKind::poisson2d: return "poisson2d";
  }
  return "?";
}

std::size_t SamplingMask::sample_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : pattern) n += v;
  return n;
}

double SamplingMask::density() const {
  return static_cast<double>(sample_count()) / (static_cast<double>(h) * w);
}

namespace {

void fill_cartesian(SamplingMask& m, int acs_lines) {
  // Align the retained columns so the DC column (w/2) is always sampled.
  const int offset = (m.w / 2) % m.accel;
  for (int x = offset; x < m.w; x += m.accel) {
    for (int y = 0; y < m.h; ++y) m.pattern[static_cast<std::size_t>(y) * m.w + x] = 1;
  }
  if (acs_lines > 0) {
    const int lo = std::max(0, m.w / 2 - acs_lines / 2);
    const int hi = std::min(m.w, lo + acs_lines);
    for (int x = lo; x < hi; ++x) {
      for (int y = 0; y < m.h; ++y) m.pattern[static_cast<std::size_t>(y) * m.w + x] = 1;
    }
  }
}

void fill_random(SamplingMask& m, std::mt19937_64& rng) {
  const std::size_t total = static_cast<std::size_t>(m.h) * m.w;
  const std::size_t target = static_cast<std::size_t>(
      std::llround(static_cast<double>(total) / m.accel));
  std::vector<std::uint32_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0u);
  // Partial Fisher-Yates: the first `target` entries become the sample set.
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
    m.pattern[idx[i]] = 1;
  }
}

struct DartGrid {
  double cell = 0;
  int gw = 0, gh = 0;
  std::vector<int> slots;  // point index per cell, -1 empty

  DartGrid(int h, int w, double radius) {
    cell = radius / std::sqrt(2.0);
    gw = static_cast<int>(std::ceil(w / cell)) + 1;
    gh = static_cast<int>(std::ceil(h / cell)) + 1;
    slots.assign(static_cast<std::size_t>(gw) * gh, -1);
  }
  int& slot(int gy, int gx) { return slots[static_cast<std::size_t>(gy) * gw + gx]; }
};

std::vector<std::pair<int, int>> dart_throw(int h, int w, double radius,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ry(0, h - 1), rx(0, w - 1);
  DartGrid grid(h, w, radius);
  std::vector<std::pair<int, int>> pts;
  const double r2 = radius * radius;
  const std::size_t attempts = 40u * static_cast<std::size_t>(h) * w / 4 + 4000;
  for (std::size_t a = 0; a < attempts; ++a) {
    const int y = ry(rng), x = rx(rng);
    const int gy = static_cast<int>(y / grid.cell);
    const int gx = static_cast<int>(x / grid.cell);
    bool ok = true;
    for (int dy = -2; dy <= 2 && ok; ++dy) {
      for (int dx = -2; dx <= 2 && ok; ++dx) {
        const int ny = gy + dy, nx = gx + dx;
        if (ny < 0 || ny >= grid.gh || nx < 0 || nx >= grid.gw) continue;
        const int pi = grid.slot(ny, nx);
        if (pi < 0) continue;
        const double ddy = pts[pi].first - y, ddx = pts[pi].second - x;
        if (ddy * ddy + ddx * ddx < r2) ok = false;
      }
    }
    if (ok) {
      grid.slot(gy, gx) = static_cast<int>(pts.size());
      pts.emplace_back(y, x);
    }
  }
  return pts;
}

void fill_poisson(SamplingMask& m, std::uint64_t seed, std::mt19937_64& rng) {
  const std::size_t total = static_cast<std::size_t>(m.h) * m.w;
  const std::size_t target = static_cast<std::size_t>(
      std::llround(static_cast<double>(total) / m.accel));

  // Larger radius -> fewer saturated darts; bisect to the target count.
  double lo = 1.0, hi = std::sqrt(static_cast<double>(total) / target) * 3.0 + 2.0;
  std::vector<std::pair<int, int>> best;
  for (int it = 0; it < 22; ++it) {
    const double r = 0.5 * (lo + hi);
    auto pts = dart_throw(m.h, m.w, r, seed);
    best = pts;
    if (pts.size() > target) {
      lo = r;
    } else {
      hi = r;
    }
    const double ratio = static_cast<double>(pts.size()) / target;
    if (ratio > 0.99 && ratio < 1.01) break;
  }
  for (const auto& [y, x] : best) m.pattern[static_cast<std::size_t>(y) * m.w + x] = 1;

  // Thin or grow to the exact target so the density invariant always holds.
  std::size_t count = m.sample_count();
  if (count > target) {
    std::vector<std::size_t> on;
    for (std::size_t i = 0; i < total; ++i) {
      if (m.pattern[i]) on.push_back(i);
    }
    while (count > target) {
      std::uniform_int_distribution<std::size_t> pick(0, on.size() - 1);
      const std::size_t j = pick(rng);
      m.pattern[on[j]] = 0;
      on[j] = on.back();
      on.pop_back();
      --count;
    }
  } else if (count < target) {
    std::vector<std::size_t> off;
    for (std::size_t i = 0; i < total; ++i) {
      if (!m.pattern[i]) off.push_back(i);
    }
    while (count < target) {
      std::uniform_int_distribution<std::size_t> pick(0, off.size() - 1);
      const std::size_t j = pick(rng);
      m.pattern[off[j]] = 1;
      off[j] = off.back();
      off.pop_back();
      ++count;
    }
  }
}

}  // namespace

SamplingMask generate_mask(MaskKind kind, int accel, int h, int w,
                           std::uint64_t seed, int acs_lines) {
  if (accel < 1) throw ParamError("generate_mask: acceleration factor must be >= 1");
  if (h < 1 || w < 1) throw ParamError("generate_mask: empty mask shape");
  if (kind == MaskKind::cartesian1d && accel > w) {
    throw ParamError("generate_mask: cartesian acceleration exceeds width");
  }
  SamplingMask m;
  m.h = h;
  m.w = w;
  m.kind = kind;
  m.accel = accel;
  m.seed = seed;
  m.pattern.assign(static_cast<std::size_t>(h) * w, 0);

  if (accel == 1) {
    std::fill(m.pattern.begin(), m.pattern.end(), std::uint8_t(1));
    return m;
  }

  std::mt19937_64 rng(seed);
  switch (kind) {
    case MaskKind::cartesian1d:
      fill_cartesian(m, acs_lines);
      break;
    case MaskKind::random2d:
      fill_random(m, rng);
      break;
    case MaskKind::poisson2d:
      fill_poisson(m, seed ^ 0x9e3779b97f4a7c15ull, rng);
      break;
  }
  return m;
}

void apply_mask(CoilStack& k, const SamplingMask& mask) {
  if (k.h != mask.h || k.w != mask.w) throw ShapeError("apply_mask: shape mismatch");
  for (int c = 0; c < k.coils; ++c) {
    cdouble* p = k.plane(c);
    for (std::size_t i = 0; i < k.plane_size(); ++i) {
      if (!mask.pattern[i]) p[i] = cdouble(0.0, 0.0);
    }
  }
}

}  // namespace kieb
