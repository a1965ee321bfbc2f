#include "kieb/metrics.hpp"

#include <cmath>

#include "kieb/errors.hpp"

namespace kieb {

namespace {
constexpr double kPsnrCapDb = 200.0;
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_same_shape(const RealImage& x, const RealImage& ref) {
  if (x.h != ref.h || x.w != ref.w) throw ShapeError("metrics: image shape mismatch");
}
}  // namespace

double psnr(const RealImage& x, const RealImage& ref, double data_range) {
  check_same_shape(x, ref);
  if (data_range <= 0.0) throw ParamError("psnr: data_range must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data[i] - ref.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (!std::isfinite(mse)) {
    throw NumericError("psnr: non-finite values in input images");
  }
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const RealImage& x, const RealImage& ref, double data_range) {
  check_same_shape(x, ref);
  if (data_range <= 0.0) throw ParamError("ssim: data_range must be positive");
  if (x.h < kWindow || x.w < kWindow) {
    throw ShapeError("ssim: image smaller than the 11x11 window");
  }

  double kernel[kWindow];
  double ksum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& v : kernel) v /= ksum;

  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);

  const int oh = x.h - kWindow + 1;
  const int ow = x.w - kWindow + 1;
  double total = 0.0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int ky = 0; ky < kWindow; ++ky) {
        for (int kx = 0; kx < kWindow; ++kx) {
          const double wgt = kernel[ky] * kernel[kx];
          const double a = x.at(oy + ky, ox + kx);
          const double b = ref.at(oy + ky, ox + kx);
          mx += wgt * a;
          my += wgt * b;
          mxx += wgt * a * a;
          myy += wgt * b * b;
          mxy += wgt * a * b;
        }
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cxy = mxy - mx * my;
      const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      total += num / den;
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

MetricReport evaluate(const RealImage& x, const RealImage& ref) {
  check_same_shape(x, ref);
  const double ref_max = ref.max_value();
  if (ref_max <= 0.0) throw ParamError("evaluate: reference image has no positive values");
  RealImage xs = x, rs = ref;
  for (double& v : xs.data) v /= ref_max;
  for (double& v : rs.data) v /= ref_max;
  MetricReport rep;
  rep.data_range = 1.0;
  rep.psnr_db = psnr(xs, rs, 1.0);
  rep.ssim = ssim(xs, rs, 1.0);
  return rep;
}

}  // namespace kieb
