#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "kieb/coils.hpp"
#include "kieb/complex_types.hpp"
#include "kieb/fft.hpp"
#include "kieb/mask.hpp"
#include "kieb/metrics.hpp"
#include "kieb/phantom.hpp"
#include "kieb/weighting.hpp"
#include "test_util.hpp"

using namespace kieb;
using test::rel_err;

namespace {

ComplexImage random_complex(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexImage img(h, w);
  for (cdouble& v : img.data) v = cdouble(u(rng), u(rng));
  return img;
}

double l2_norm(const ComplexImage& img) {
  double acc = 0.0;
  for (const cdouble& v : img.data) acc += std::norm(v);
  return std::sqrt(acc);
}

SensitivityMaps unit_coil(int h, int w) {
  CoilStack s(1, h, w);
  for (cdouble& v : s.data) v = cdouble(1.0, 0.0);
  return SensitivityMaps{std::move(s)};
}

}  // namespace

TEST_SUITE_BEGIN("mri-core");

TEST_CASE("two-channel views round trip bit-exactly") {
  ComplexImage img = random_complex(5, 7, 1);
  ComplexImage back = from_two_channel(two_channel(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data[i] == img.data[i]);

  CoilStack stack(3, 4, 6);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (cdouble& v : stack.data) v = cdouble(u(rng), u(rng));
  CoilStack sback = stack_from_two_channel(two_channel(stack));
  for (std::size_t i = 0; i < stack.size(); ++i) CHECK(sback.data[i] == stack.data[i]);
}

TEST_CASE("fft2c round trips and preserves the norm") {
  for (auto [h, w] : {std::pair{16, 16}, std::pair{15, 9}, std::pair{8, 12}}) {
    CAPTURE(h);
    CAPTURE(w);
    ComplexImage x = random_complex(h, w, 10 + h);
    ComplexImage back = ifft2c(fft2c(x));
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(back.data[i] - x.data[i]) < 1e-12);
    }
    CHECK(rel_err(l2_norm(fft2c(x)), l2_norm(x), 1e-12) < 1e-12);
  }
}

TEST_CASE("fft2c of a constant image is a single DC coefficient of value N") {
  const int n = 32;
  ComplexImage ones(n, n);
  for (cdouble& v : ones.data) v = cdouble(1.0, 0.0);
  ComplexImage k = fft2c(ones);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const cdouble expect =
          (y == n / 2 && x == n / 2) ? cdouble(double(n), 0.0) : cdouble(0.0, 0.0);
      CHECK(std::abs(k.at(y, x) - expect) < 1e-10);
    }
  }
}

TEST_CASE("masks at R=1 are fully sampled") {
  for (MaskKind kind :
       {MaskKind::cartesian1d, MaskKind::random2d, MaskKind::poisson2d}) {
    SamplingMask m = generate_mask(kind, 1, 12, 16, 5);
    CHECK(m.sample_count() == 12u * 16u);
  }
}

TEST_CASE("cartesian mask keeps exactly every R-th phase-encoding line") {
  SamplingMask m = generate_mask(MaskKind::cartesian1d, 2, 8, 256, 0);
  // Count sampled columns.
  int cols = 0;
  for (int x = 0; x < m.w; ++x) cols += m.sampled(0, x) ? 1 : 0;
  CHECK(cols == 128);
  // Fully sampled along the frequency-encoding direction.
  for (int x = 0; x < m.w; ++x) {
    for (int y = 1; y < m.h; ++y) CHECK(m.sampled(y, x) == m.sampled(0, x));
  }
  // DC column is retained.
  CHECK(m.sampled(0, 128));
  CHECK_THROWS_AS(generate_mask(MaskKind::cartesian1d, 300, 8, 256, 0), ParamError);
  CHECK_THROWS_AS(generate_mask(MaskKind::cartesian1d, 0, 8, 8, 0), ParamError);
}

TEST_CASE("cartesian ACS band is fully sampled") {
  SamplingMask m = generate_mask(MaskKind::cartesian1d, 4, 4, 64, 0, 8);
  for (int x = 28; x < 36; ++x) CHECK(m.sampled(0, x));
  CHECK(m.density() > 0.25);  // every-4th plus the band
}

TEST_CASE("random2d density lands within five percent of 1/R") {
  SamplingMask m = generate_mask(MaskKind::random2d, 4, 256, 256, 7);
  CHECK(m.density() > 0.2375);
  CHECK(m.density() < 0.2625);
  // Small masks obey the bound too.
  SamplingMask small = generate_mask(MaskKind::random2d, 3, 16, 16, 8);
  CHECK(std::abs(small.density() - 1.0 / 3.0) < 0.05 / 3.0);
}

TEST_CASE("poisson2d density lands within five percent of 1/R") {
  for (int r : {4, 8}) {
    SamplingMask m = generate_mask(MaskKind::poisson2d, r, 96, 96, 11);
    CAPTURE(r);
    CHECK(std::abs(m.density() - 1.0 / r) < 0.05 / r);
  }
}

TEST_CASE("mask generation is deterministic per seed") {
  for (MaskKind kind : {MaskKind::random2d, MaskKind::poisson2d}) {
    SamplingMask a = generate_mask(kind, 4, 48, 48, 123);
    SamplingMask b = generate_mask(kind, 4, 48, 48, 123);
    SamplingMask c = generate_mask(kind, 4, 48, 48, 124);
    CHECK(a.pattern == b.pattern);
    CHECK(a.pattern != c.pattern);
  }
}

TEST_CASE("weight matrix with p=0 is all ones") {
  WeightMatrix w = weight_matrix(0.37, 0.0, 12, 12);
  for (double v : w.values) CHECK(v == 1.0);
}

TEST_CASE("weight matrix with r=0 collapses to the floor") {
  WeightMatrix w = weight_matrix(0.0, 0.5, 8, 8);
  CHECK(w.floor > 0.0);
  for (double v : w.values) CHECK(v == w.floor);
}

TEST_CASE("weight matrix value at (kx,ky)=(1,1) for r=0.1 p=0.5") {
  WeightMatrix w = weight_matrix(0.1, 0.5, 16, 16);
  // Centered coordinates: pixel (h/2+1, w/2+1) has (kx, ky) = (1, 1).
  CHECK(rel_err(w.at(9, 9), std::sqrt(0.2), 1e-9) < 1e-12);
  CHECK_THROWS_AS(weight_matrix(-0.1, 0.5, 8, 8), ParamError);
  CHECK_THROWS_AS(weight_matrix(0.1, -0.5, 8, 8), ParamError);
}

TEST_CASE("weight matrix is symmetric under frequency negation") {
  WeightMatrix w = weight_matrix(0.1, 0.5, 16, 12);
  for (int ky = -5; ky <= 5; ++ky) {
    for (int kx = -5; kx <= 5; ++kx) {
      CHECK(w.at(8 + ky, 6 + kx) == w.at(8 - ky, 6 - kx));
    }
  }
}

TEST_CASE("apply_weight with unit weight is the identity") {
  ComplexImage k = random_complex(8, 8, 20);
  WeightMatrix w = weight_matrix(0.5, 0.0, 8, 8);
  ComplexImage out = apply_weight(k, w);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(out.data[i] == k.data[i]);
}

TEST_CASE("apply/unapply weight round trips to 1e-12") {
  ComplexImage k = random_complex(32, 32, 21);
  WeightMatrix w = weight_matrix(0.1, 0.5, 32, 32);
  ComplexImage back = unapply_weight(apply_weight(k, w), w);
  for (std::size_t i = 0; i < k.size(); ++i) {
    CHECK(std::abs(back.data[i] - k.data[i]) < 1e-12);
  }
}

TEST_CASE("weighting flattens the k-space magnitude spread by at least 10x") {
  RealImage ph = shepp_logan(128, 128);
  ComplexImage img(128, 128);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = cdouble(ph.data[i], 0.0);
  ComplexImage k = fft2c(img);
  WeightMatrix w = weight_matrix(0.1, 0.5, 128, 128);
  ComplexImage kw = apply_weight(k, w);

  auto spread = [](const ComplexImage& m) {
    std::vector<double> mags(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) mags[i] = std::abs(m.data[i]);
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    const double median = mags[mags.size() / 2];
    const double mx = *std::max_element(mags.begin(), mags.end());
    return mx / median;
  };
  CHECK(spread(k) > 10.0 * spread(kw));
}

TEST_CASE("sos of a single coil is the magnitude image") {
  CoilStack s(1, 4, 4);
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (cdouble& v : s.data) v = cdouble(u(rng), u(rng));
  RealImage img = sos_combine(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(rel_err(img.data[i], std::abs(s.data[i]), 1e-12) < 1e-12);
  }
  CHECK_THROWS_AS(sos_combine(CoilStack{}), ParamError);
}

TEST_CASE("sos of pixel values 3 and 4 is 5") {
  CoilStack s(2, 1, 1);
  s.data[0] = cdouble(3.0, 0.0);
  s.data[1] = cdouble(0.0, 4.0);
  CHECK(sos_combine(s).data[0] == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("sos is invariant under coil permutation and per-coil phase") {
  CoilStack s(3, 6, 6);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (cdouble& v : s.data) v = cdouble(u(rng), u(rng));

  CoilStack perm(3, 6, 6);
  perm.set_coil(0, s.coil(2));
  perm.set_coil(1, s.coil(0));
  perm.set_coil(2, s.coil(1));
  RealImage a = sos_combine(s), b = sos_combine(perm);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(rel_err(a.data[i], b.data[i], 1e-12) < 1e-13);
  }

  CoilStack rot = s;
  const double phases[3] = {0.3, -1.2, 2.5};
  for (int c = 0; c < 3; ++c) {
    const cdouble f(std::cos(phases[c]), std::sin(phases[c]));
    cdouble* p = rot.plane(c);
    for (std::size_t i = 0; i < rot.plane_size(); ++i) p[i] *= f;
  }
  RealImage r = sos_combine(rot);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(rel_err(r.data[i], a.data[i], 1e-12) < 1e-12);
  }
}

TEST_CASE("unit sensitivities act as the identity in both directions") {
  SensitivityMaps s = unit_coil(5, 5);
  ComplexImage img = random_complex(5, 5, 40);
  CoilStack f = apply_sensitivities(img, s);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(f.data[i] == img.data[i]);
  ComplexImage back = adjoint_sensitivities(f, s);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("adjoint(forward()) is the identity on normalized maps") {
  SensitivityMaps s = synth_sensitivities(4, 24, 24, 3);
  // Normalization invariant: SOS of the maps is 1 everywhere.
  RealImage sos = sos_combine(s.maps);
  for (double v : sos.data) CHECK(rel_err(v, 1.0, 1e-12) < 1e-12);

  ComplexImage img = random_complex(24, 24, 41);
  ComplexImage back = adjoint_sensitivities(apply_sensitivities(img, s), s);
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(std::abs(back.data[i] - img.data[i]) < 1e-12);
  }
}

TEST_CASE("sensitivity forward and adjoint satisfy the inner-product identity") {
  SensitivityMaps s = synth_sensitivities(3, 16, 16, 4);
  ComplexImage img = random_complex(16, 16, 42);
  CoilStack y(3, 16, 16);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (cdouble& v : y.data) v = cdouble(u(rng), u(rng));

  CoilStack fwd = apply_sensitivities(img, s);
  cdouble lhs(0.0, 0.0);
  for (std::size_t i = 0; i < fwd.size(); ++i) lhs += fwd.data[i] * std::conj(y.data[i]);
  ComplexImage adj = adjoint_sensitivities(y, s);
  cdouble rhs(0.0, 0.0);
  for (std::size_t i = 0; i < img.size(); ++i) rhs += img.data[i] * std::conj(adj.data[i]);
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("phantom intensities live in the unit interval") {
  RealImage ph = shepp_logan(64, 64);
  double mx = 0.0;
  for (double v : ph.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    mx = std::max(mx, v);
  }
  CHECK(mx > 0.5);

  RealImage a = shepp_logan_variant(32, 32, 9);
  RealImage b = shepp_logan_variant(32, 32, 9);
  RealImage c = shepp_logan_variant(32, 32, 10);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
}

TEST_CASE("noiseless full sampling on a unit coil measures fft2c of the image") {
  RealImage ph = shepp_logan(32, 32);
  SensitivityMaps s = unit_coil(32, 32);
  SamplingMask full = generate_mask(MaskKind::random2d, 1, 32, 32, 0);
  CoilStack f = simulate_acquisition(ph, s, full, 0.0, 0);

  ComplexImage img(32, 32);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = cdouble(ph.data[i], 0.0);
  ComplexImage k = fft2c(img);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(f.data[i] == k.data[i]);
}

TEST_CASE("measurements vanish off the sample set") {
  RealImage ph = shepp_logan(32, 32);
  SensitivityMaps s = synth_sensitivities(4, 32, 32, 1);
  SamplingMask mask = generate_mask(MaskKind::random2d, 4, 32, 32, 17);
  CoilStack f = simulate_acquisition(ph, s, mask, 0.02, 5);
  for (int c = 0; c < f.coils; ++c) {
    const cdouble* p = f.plane(c);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        if (!mask.sampled(y, x)) {
          CHECK(p[static_cast<std::size_t>(y) * 32 + x] == cdouble(0.0, 0.0));
        }
      }
    }
  }
}

TEST_CASE("zero-filled reconstruction degrades with acceleration") {
  RealImage ph = shepp_logan(64, 64);
  SensitivityMaps s = synth_sensitivities(4, 64, 64, 2);
  CoilStack coils = apply_sensitivities(
      [&] {
        ComplexImage img(64, 64);
        for (std::size_t i = 0; i < img.size(); ++i) {
          img.data[i] = cdouble(ph.data[i], 0.0);
        }
        return img;
      }(),
      s);
  RealImage truth = sos_combine(coils);

  auto zero_fill_psnr = [&](int accel) {
    SamplingMask m = generate_mask(MaskKind::random2d, accel, 64, 64, 3);
    CoilStack f = simulate_acquisition(ph, s, m, 0.0, 0);
    RealImage recon = sos_combine(ifft2c(f));
    return evaluate(recon, truth).psnr_db;
  };
  const double full = zero_fill_psnr(1);
  const double accelerated = zero_fill_psnr(4);
  CHECK(accelerated < full);
  CHECK(full > 100.0);
}

TEST_SUITE_END();
