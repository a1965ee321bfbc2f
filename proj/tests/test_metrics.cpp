#include <doctest.h>

#include <cmath>
#include <random>

#include "kieb/metrics.hpp"
#include "test_util.hpp"

using namespace kieb;
using test::rel_err;

namespace {

RealImage random_image(int h, int w, std::uint64_t seed) {
  RealImage img(h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : img.data) v = u(rng);
  return img;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr of identical images hits the cap") {
  RealImage img = random_image(16, 16, 1);
  CHECK(psnr(img, img, 1.0) == 200.0);
}

TEST_CASE("psnr of a uniform 0.1 offset at unit range is 20 dB") {
  RealImage ref = random_image(16, 16, 2);
  RealImage x = ref;
  for (double& v : x.data) v += 0.1;  // MSE = 0.01
  CHECK(rel_err(psnr(x, ref, 1.0), 20.0, 1e-9) < 1e-12);
}

TEST_CASE("psnr is invariant under joint rescaling") {
  RealImage ref = random_image(12, 12, 3);
  RealImage x = random_image(12, 12, 4);
  const double base = psnr(x, ref, 1.0);
  const double c = 7.3;
  RealImage xs = x, rs = ref;
  for (double& v : xs.data) v *= c;
  for (double& v : rs.data) v *= c;
  CHECK(rel_err(psnr(xs, rs, c), base, 1e-9) < 1e-10);
}

TEST_CASE("psnr strictly decreases as noise grows") {
  RealImage ref = random_image(32, 32, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  RealImage unit_noise(32, 32);
  for (double& v : unit_noise.data) v = n(rng);

  double prev = 1e9;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    RealImage x = ref;
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += amp * unit_noise.data[i];
    const double p = psnr(x, ref, 1.0);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("psnr validates its inputs") {
  RealImage a = random_image(8, 8, 7), b = random_image(8, 9, 8);
  CHECK_THROWS_AS(psnr(a, b, 1.0), ShapeError);
  CHECK_THROWS_AS(psnr(a, a, 0.0), ParamError);
}

TEST_CASE("ssim of identical images is one") {
  RealImage img = random_image(16, 16, 9);
  CHECK(rel_err(ssim(img, img, 1.0), 1.0, 1e-9) < 1e-12);
}

TEST_CASE("ssim of constant zero vs constant one has the closed form") {
  RealImage zeros(16, 16, 0.0), ones(16, 16, 1.0);
  const double c1 = 1e-4;
  CHECK(rel_err(ssim(zeros, ones, 1.0), c1 / (1.0 + c1), 1e-9) < 1e-9);
}

TEST_CASE("ssim is symmetric and bounded") {
  RealImage a = random_image(20, 20, 10);
  RealImage b = random_image(20, 20, 11);
  const double ab = ssim(a, b, 1.0);
  CHECK(rel_err(ab, ssim(b, a, 1.0), 1e-9) < 1e-12);
  CHECK(ab >= -1.0);
  CHECK(ab <= 1.0);
  CHECK(ab < 1.0);  // only identical inputs reach 1
}

TEST_CASE("ssim rejects images smaller than the window") {
  RealImage a(10, 16, 0.5), b(10, 16, 0.5);
  CHECK_THROWS_AS(ssim(a, b, 1.0), ShapeError);
}

TEST_CASE("evaluate normalizes by the reference maximum") {
  RealImage ref = random_image(16, 16, 12);
  RealImage x = ref;
  for (double& v : x.data) v *= 1.02;
  MetricReport r1 = evaluate(x, ref);

  RealImage ref_scaled = ref, x_scaled = x;
  for (double& v : ref_scaled.data) v *= 5.0;
  for (double& v : x_scaled.data) v *= 5.0;
  MetricReport r2 = evaluate(x_scaled, ref_scaled);
  CHECK(rel_err(r1.psnr_db, r2.psnr_db, 1e-9) < 1e-10);
  CHECK(rel_err(r1.ssim, r2.ssim, 1e-9) < 1e-10);
  CHECK(r1.data_range == 1.0);
}

TEST_SUITE_END();
