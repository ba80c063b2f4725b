#include "pvrisk/simd/kernels.hpp"

#if defined(PVRISK_SIMD_NEON)

#include <arm_neon.h>

namespace pvrisk::simd::neon {

void add_squared_diff(const double* column, double q, double* acc, std::size_t n) {
  const float64x2_t vq = vdupq_n_f64(q);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(column + i), vq);
    // Separate multiply and add: no fused rounding, matches the scalar path.
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vmulq_f64(d, d)));
  }
  for (; i < n; ++i) {
    const double d = column[i] - q;
    acc[i] += d * d;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double sum = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

std::size_t argmin(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

}  // namespace pvrisk::simd::neon

#endif
