// Compiled with -mavx2 on x86; only reached after a runtime CPU check.
#include "pvrisk/simd/kernels.hpp"

#if defined(PVRISK_SIMD_X86)

#include <immintrin.h>

#include <cstdint>

namespace pvrisk::simd::avx2 {

void add_squared_diff(const double* column, double q, double* acc, std::size_t n) {
  const __m256d vq = _mm256_set1_pd(q);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(column + i), vq);
    const __m256d a = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(a, _mm256_mul_pd(d, d)));
  }
  for (; i < n; ++i) {
    const double d = column[i] - q;
    acc[i] += d * d;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    s1 = _mm256_add_pd(s1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

std::size_t argmin(const double* v, std::size_t n) {
  if (n < 8) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (v[i] < v[best]) best = i;
    return best;
  }
  // Each lane keeps its first strict minimum; the reduction breaks value ties
  // by smaller index, so the result matches the sequential scan.
  __m256d best_val = _mm256_loadu_pd(v);
  __m256i best_idx = _mm256_set_epi64x(3, 2, 1, 0);
  __m256i cur_idx = best_idx;
  const __m256i step = _mm256_set1_epi64x(4);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    cur_idx = _mm256_add_epi64(cur_idx, step);
    const __m256d x = _mm256_loadu_pd(v + i);
    const __m256d lt = _mm256_cmp_pd(x, best_val, _CMP_LT_OQ);
    best_val = _mm256_blendv_pd(best_val, x, lt);
    best_idx = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(best_idx), _mm256_castsi256_pd(cur_idx), lt));
  }
  alignas(32) double vals[4];
  alignas(32) std::int64_t idxs[4];
  _mm256_store_pd(vals, best_val);
  _mm256_store_si256(reinterpret_cast<__m256i*>(idxs), best_idx);
  std::size_t best = static_cast<std::size_t>(idxs[0]);
  double best_v = vals[0];
  for (int k = 1; k < 4; ++k) {
    const auto idx = static_cast<std::size_t>(idxs[k]);
    if (vals[k] < best_v || (vals[k] == best_v && idx < best)) {
      best_v = vals[k];
      best = idx;
    }
  }
  for (; i < n; ++i) {
    if (v[i] < best_v) {
      best_v = v[i];
      best = i;
    }
  }
  return best;
}

}  // namespace pvrisk::simd::avx2

#endif
