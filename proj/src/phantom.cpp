#include "kieb/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kieb/errors.hpp"
#include "kieb/fft.hpp"

namespace kieb {
namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

// Toft's low-contrast parameterization.
constexpr Ellipse kSheppLogan[] = {
    {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

RealImage render(int h, int w, const std::vector<Ellipse>& ellipses) {
  RealImage img(h, w);
  for (const Ellipse& e : ellipses) {
    const double phi = e.phi_deg * M_PI / 180.0;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    for (int y = 0; y < h; ++y) {
      // Normalized coordinates in [-1, 1], row 0 at the top.
      const double yn = 1.0 - 2.0 * (y + 0.5) / h;
      for (int x = 0; x < w; ++x) {
        const double xn = 2.0 * (x + 0.5) / w - 1.0;
        const double xr = (xn - e.x0) * cphi + (yn - e.y0) * sphi;
        const double yr = -(xn - e.x0) * sphi + (yn - e.y0) * cphi;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) {
          img.at(y, x) += e.value;
        }
      }
    }
  }
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

}  // namespace

RealImage shepp_logan(int h, int w) {
  return render(h, w, std::vector<Ellipse>(std::begin(kSheppLogan), std::end(kSheppLogan)));
}

RealImage shepp_logan_variant(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rot(-20.0, 20.0);
  std::uniform_real_distribution<double> scale(0.85, 1.08);
  std::uniform_real_distribution<double> shift(-0.07, 0.07);
  std::uniform_real_distribution<double> jitter(0.88, 1.12);

  const double theta = rot(rng) * M_PI / 180.0;
  const double s = scale(rng);
  const double dx = shift(rng), dy = shift(rng);
  const double ct = std::cos(theta), st = std::sin(theta);

  std::vector<Ellipse> ellipses(std::begin(kSheppLogan), std::end(kSheppLogan));
  for (std::size_t i = 0; i < ellipses.size(); ++i) {
    Ellipse& e = ellipses[i];
    const double x0 = e.x0 * ct - e.y0 * st;
    const double y0 = e.x0 * st + e.y0 * ct;
    e.x0 = s * x0 + dx;
    e.y0 = s * y0 + dy;
    e.a *= s;
    e.b *= s;
    e.phi_deg += theta * 180.0 / M_PI;
    // Keep the skull pair matched so the interior stays in range.
    if (i >= 2) e.value *= jitter(rng);
  }
  return render(h, w, ellipses);
}

SensitivityMaps synth_sensitivities(int coils, int h, int w, std::uint64_t seed) {
  if (coils < 1) throw ParamError("synth_sensitivities: need at least one coil");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_grad(-0.6, 0.6);

  CoilStack maps(coils, h, w);
  const double sigma = 0.75 * std::max(h, w);
  for (int c = 0; c < coils; ++c) {
    const double ang = 2.0 * M_PI * c / coils;
    const double cy = h / 2.0 + 0.55 * h / 2.0 * std::sin(ang);
    const double cx = w / 2.0 + 0.55 * w / 2.0 * std::cos(ang);
    const double py = phase_grad(rng) / h;
    const double px = phase_grad(rng) / w;
    cdouble* p = maps.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double amp = std::exp(-d2 / (2.0 * sigma * sigma));
        const double ph = 2.0 * M_PI * (py * y + px * x);
        p[static_cast<std::size_t>(y) * w + x] =
            amp * cdouble(std::cos(ph), std::sin(ph));
      }
    }
  }
  // SOS-normalize; the Gaussian lobes are positive everywhere, so this is safe.
  for (std::size_t i = 0; i < maps.plane_size(); ++i) {
    double sos = 0.0;
    for (int c = 0; c < coils; ++c) sos += std::norm(maps.plane(c)[i]);
    const double inv = 1.0 / std::sqrt(sos);
    for (int c = 0; c < coils; ++c) maps.plane(c)[i] *= inv;
  }
  return SensitivityMaps{std::move(maps)};
}

CoilStack simulate_acquisition(const RealImage& image, const SensitivityMaps& sens,
                               const SamplingMask& mask, double noise_sigma,
                               std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ParamError("simulate_acquisition: negative noise sigma");
  if (image.h != sens.maps.h || image.w != sens.maps.w) {
    throw ShapeError("simulate_acquisition: image/sensitivity shape mismatch");
  }
  ComplexImage img(image.h, image.w);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = cdouble(image.data[i], 0.0);

  CoilStack k = fft2c(apply_sensitivities(img, sens));
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise_sigma / std::sqrt(2.0));
    for (cdouble& v : k.data) v += cdouble(n(rng), n(rng));
  }
  apply_mask(k, mask);
  return k;
}

}  // namespace kieb
