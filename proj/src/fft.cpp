#include "kieb/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace kieb {
namespace {

// One cached FFTW plan per (h, w, direction), together with its aligned
// buffer. Execution copies through the buffer under the cache mutex; plans
// use FFTW_ESTIMATE so results are deterministic across runs.
struct PlanSlot {
  fftw_plan plan = nullptr;
  fftw_complex* buf = nullptr;
  std::size_t n = 0;

  ~PlanSlot() {
    if (plan) fftw_destroy_plan(plan);
    if (buf) fftw_free(buf);
  }
};

std::mutex g_fft_mutex;
std::map<std::tuple<int, int, int>, PlanSlot> g_plans;

PlanSlot& plan_for(int h, int w, int sign) {
  auto key = std::make_tuple(h, w, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  PlanSlot& slot = g_plans[key];
  slot.n = static_cast<std::size_t>(h) * w;
  slot.buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * slot.n));
  slot.plan = fftw_plan_dft_2d(h, w, slot.buf, slot.buf, sign, FFTW_ESTIMATE);
  return slot;
}

// fftshift along one axis: index 0 (DC) moves to floor(n/2).
inline int shift_fwd(int i, int n) { return (i + n / 2) % n; }
// ifftshift: inverse of the above (differs for odd n).
inline int shift_inv(int i, int n) { return (i + (n + 1) / 2) % n; }

ComplexImage transform(const ComplexImage& x, int sign) {
  ComplexImage out(x.h, x.w);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.h) * x.w);

  std::lock_guard<std::mutex> lock(g_fft_mutex);
  PlanSlot& slot = plan_for(x.h, x.w, sign);

  // ifftshift into the plan buffer.
  for (int y = 0; y < x.h; ++y) {
    const int sy = shift_inv(y, x.h);
    for (int c = 0; c < x.w; ++c) {
      const int sc = shift_inv(c, x.w);
      const cdouble v = x.at(y, c);
      fftw_complex& dst = slot.buf[static_cast<std::size_t>(sy) * x.w + sc];
      dst[0] = v.real();
      dst[1] = v.imag();
    }
  }
  fftw_execute(slot.plan);
  // fftshift back out, with orthonormal scaling.
  for (int y = 0; y < x.h; ++y) {
    const int sy = shift_fwd(y, x.h);
    for (int c = 0; c < x.w; ++c) {
      const int sc = shift_fwd(c, x.w);
      const fftw_complex& src = slot.buf[static_cast<std::size_t>(y) * x.w + c];
      out.at(sy, sc) = cdouble(src[0] * scale, src[1] * scale);
    }
  }
  return out;
}

}  // namespace

ComplexImage fft2c(const ComplexImage& x) { return transform(x, FFTW_FORWARD); }
ComplexImage ifft2c(const ComplexImage& k) { return transform(k, FFTW_BACKWARD); }

CoilStack fft2c(const CoilStack& x) {
  CoilStack out(x.coils, x.h, x.w);
  for (int c = 0; c < x.coils; ++c) out.set_coil(c, fft2c(x.coil(c)));
  return out;
}

CoilStack ifft2c(const CoilStack& k) {
  CoilStack out(k.coils, k.h, k.w);
  for (int c = 0; c < k.coils; ++c) out.set_coil(c, ifft2c(k.coil(c)));
  return out;
}

}  // namespace kieb
