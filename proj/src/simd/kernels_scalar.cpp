#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::simd::scalar {

void add_squared_diff(const double* column, double q, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = column[i] - q;
    acc[i] += d * d;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

std::size_t argmin(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

}  // namespace pvrisk::simd::scalar
